"""Monte-Carlo harness for the security games, protocol estimators and binding audits.

Every trial draws its generator from ``derive_seed(master, index)``, so a
report depends only on (seed, trials, strategy, params) and not on ``jobs``.
Trial functions live at module level so a process pool can pickle them.
"""
from __future__ import annotations

import logging
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, TypeVar

import numpy as np

from .backend import DenseState
from .commitment import (
    CcdDecommitment,
    CommitParams,
    ccd_commit,
    ccd_extract,
    ccd_verify1,
    ccd_verify_sum,
)
from .constants import MIN_TRIALS, PROGRESS_EVERY
from .instances import Instance, InstanceError, soundness_bound
from .oracles import OPENING_SEARCH, RandomOracle, commit_classical, find_openings, ro_reprogram
from .protocol import ProverStrategy, VerifierStrategy, run_protocol, run_sequential
from .simulators import simulator_s1, simulator_s2, simulator_s3, masked_average
from .ske import SkeDeletionCert, SkeError, SkeParams, SkeSecretKey, ske_enc, ske_keygen, ske_verify
from .stats import (
    AdvantageEstimate,
    GameOutcome,
    RateEstimate,
    TvEstimate,
    estimate_advantage,
    estimate_rate,
    estimate_tv,
)
from .strategies import (
    GAME_BIT_EVER_HIDE,
    GAME_C_HIDE,
    GAME_EVER_HIDE,
    GAME_OTCD,
    GAME_UNPRE,
    AdversaryStrategy,
    CiphertextView,
    CommitmentView,
    GameContext,
    Reveal,
    require_support,
)
from .util import as_bits, derive_seed, random_bits, xor_bits

_LOG = logging.getLogger(__name__)

T = TypeVar("T")

HYBRID_MODES = ("real", "hyb1", "hyb2")
ZK_COMPARISONS = ("real-vs-s3", "s1-vs-s2")

# Upper bound on refill batches when collecting successful single-shot simulations.
_MAX_SUCCESS_BATCHES = 20


class CancelledError(RuntimeError):
    pass


class CancelToken:
    """Lightweight cancellation token.

    Pass an explicit token (and call cancel()), or a check callable that
    returns True when cancellation is requested.
    """

    def __init__(self, check: Callable[[], bool] | None = None) -> None:
        self._cancelled = False
        self._check = check

    def cancel(self) -> None:
        self._cancelled = True

    def cancelled(self) -> bool:
        if self._cancelled:
            return True
        if self._check is None:
            return False
        try:
            return bool(self._check())
        except Exception:
            return False

    def raise_if_cancelled(self, message: str = "Cancelled") -> None:
        if self.cancelled():
            raise CancelledError(message)


@dataclass(frozen=True)
class GameReport:
    """One game or estimator run: what was played, with which seed, and the estimate."""

    game: str
    strategy: str
    params: dict[str, Any]
    seed: int
    estimate: AdvantageEstimate | RateEstimate | TvEstimate | None = None
    extras: dict[str, Any] = field(default_factory=dict)
    elapsed_s: float = 0.0

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"game": self.game, "strategy": self.strategy, "params": self.params}
        if self.estimate is not None:
            out.update(self.estimate.to_json())
        out.update(self.extras)
        out["seed"] = self.seed
        out["elapsed_s"] = round(self.elapsed_s, 3)
        return out


# ---------------------------------------------------------------------------
# Trial runner
# ---------------------------------------------------------------------------


def _emit(log_cb: Callable[[str], None] | None, msg: str) -> None:
    if log_cb is None:
        return
    try:
        log_cb(msg)
    except Exception:
        pass


def _check_trials(trials: int) -> int:
    n = int(trials)
    if n < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}, got {n}")
    return n


def run_trials(
    trial: Callable[[int], T],
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    label: str = "trials",
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> list[T]:
    """Run ``trial(derive_seed(seed, i))`` for i in range(trials); results come back in index order."""
    n = int(trials)
    seeds = [derive_seed(int(seed), i) for i in range(n)]
    out: list[T] = []

    if int(jobs) <= 1:
        for i, s in enumerate(seeds):
            if cancel_token is not None:
                cancel_token.raise_if_cancelled()
            out.append(trial(s))
            if (i + 1) % PROGRESS_EVERY == 0:
                _emit(log_cb, f"[{label}] {i + 1}/{n}")
        return out

    chunk = max(1, n // (int(jobs) * 8))
    with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
        for i, res in enumerate(pool.map(trial, seeds, chunksize=chunk)):
            if cancel_token is not None and cancel_token.cancelled():
                pool.shutdown(wait=False, cancel_futures=True)
                raise CancelledError("Cancelled")
            out.append(res)
            if (i + 1) % PROGRESS_EVERY == 0:
                _emit(log_cb, f"[{label}] {i + 1}/{n}")
    return out


def _check_messages(m0: Any, m1: Any, n: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_bits(m0), as_bits(m1)
    if a.size != n or b.size != n:
        raise ValueError(f"adversary messages must have {n} bits, got {a.size} and {b.size}")
    return a, b


def _cert_accepted(sk: SkeSecretKey, cert: SkeDeletionCert | None) -> bool:
    if cert is None:
        return False
    try:
        return ske_verify(sk, cert)
    except SkeError as e:
        _LOG.info("certificate rejected as malformed: %s", e)
        return False


# ---------------------------------------------------------------------------
# Security games
# ---------------------------------------------------------------------------


def _otcd_trial(strategy: AdversaryStrategy, params: SkeParams, seed: int) -> GameOutcome:
    rng = np.random.default_rng(seed)
    b = int(rng.integers(0, 2))
    messages = _check_messages(*strategy.choose_messages(int(params.msg_len), rng), int(params.msg_len))
    sk = ske_keygen(params, rng)
    ct = ske_enc(sk, messages[b], rng)
    ctx = GameContext(GAME_OTCD, params, messages)

    action = strategy.act_on_challenge([CiphertextView(ct)], ctx, rng)
    accepted = bool(action.certs) and _cert_accepted(sk, action.certs[0])
    reveals = [Reveal(sk)] if accepted else None
    guess = strategy.final_guess(action, reveals, ctx, rng)
    return GameOutcome(b, accepted, int(guess))


def exp_otcd(
    strategy: AdversaryStrategy,
    params: SkeParams,
    trials: int,
    seed: int,
    *,
    conditioning: str = "none",
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """One-time secret-key game with certified deletion.

    The adversary's guess counts whether or not the certificate passed; only
    the secret key is withheld on rejection.
    """
    require_support(strategy, GAME_OTCD)
    n = _check_trials(trials)
    t0 = time.perf_counter()
    outcomes = run_trials(
        partial(_otcd_trial, strategy, params), n, seed, jobs=jobs, label=GAME_OTCD, log_cb=log_cb, cancel_token=cancel_token
    )
    est = estimate_advantage(outcomes, conditioning=conditioning)
    _LOG.info("otcd/%s: advantage %.4f +- %.4f over %d trials", strategy.name, est.advantage, est.ci95, n)
    return GameReport(
        game=GAME_OTCD,
        strategy=strategy.name,
        params={"msg_len": int(params.msg_len), "mu": int(params.mu), "mu_comp": params.comp, "threshold": int(params.cert_threshold)},
        seed=int(seed),
        estimate=est,
        extras={"strategy_options": strategy.options()} if strategy.options() else {},
        elapsed_s=time.perf_counter() - t0,
    )


def _ever_hide_trial(strategy: AdversaryStrategy, params: CommitParams, mode: str, seed: int) -> GameOutcome:
    rng = np.random.default_rng(seed)
    b = int(rng.integers(0, 2))
    messages = _check_messages(*strategy.choose_messages(params.msg_len, rng), params.msg_len)
    oracles = params.new_oracles(rng)
    com, d, key = ccd_commit(messages[b], rng, oracles, params)

    # A1 always works through its own view of H so its queries can be told apart
    # from the challenger's.
    if mode == "real":
        a1 = oracles.with_mask(oracles.mask.fork("H_A1"))
        a2 = oracles
    elif mode == "hyb1":
        h1 = oracles.mask.fork("H_A1")
        ro_reprogram(h1, d.d1, random_bits(rng, params.mask_len))
        a1 = oracles.with_mask(h1)
        a2 = oracles
    elif mode == "hyb2":
        com = replace(com, h=random_bits(rng, params.mask_len))
        fresh = RandomOracle(params.mask_len, rng, name="H_A1")
        a1 = oracles.with_mask(fresh)
        h2 = fresh.fork("H_A2")
        ro_reprogram(h2, d.d1, xor_bits(com.h, key.ck.serialize()))
        a2 = oracles.with_mask(h2)
    else:
        raise ValueError(f"unknown hybrid mode {mode!r} (known: {', '.join(HYBRID_MODES)})")

    ctx1 = GameContext(GAME_EVER_HIDE, params, messages, a1)
    action = strategy.act_on_challenge([CommitmentView(com)], ctx1, rng)
    accepted = bool(action.certs) and _cert_accepted(key.ck, action.certs[0])
    queried = a1.mask.queried(d.d1)
    if not accepted:
        return GameOutcome(b, False, None, queried)
    guess = strategy.final_guess(action, [Reveal(key.ck, d)], replace(ctx1, oracles=a2), rng)
    return GameOutcome(b, True, int(guess), queried)


def exp_ever_hide(
    strategy: AdversaryStrategy,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    hybrid_mode: str = "real",
    conditioning: str = "none",
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Certified everlasting hiding game, optionally in one of the two hybrid modes.

    hyb1 reprograms the first-stage adversary's mask oracle at R with fresh
    bits; hyb2 additionally draws h uniformly and patches the second-stage
    oracle at R to h xor sk. A rejected certificate ends the trial with no guess.
    """
    require_support(strategy, GAME_EVER_HIDE)
    if hybrid_mode not in HYBRID_MODES:
        raise ValueError(f"unknown hybrid mode {hybrid_mode!r} (known: {', '.join(HYBRID_MODES)})")
    n = _check_trials(trials)
    t0 = time.perf_counter()
    outcomes = run_trials(
        partial(_ever_hide_trial, strategy, params, hybrid_mode),
        n,
        seed,
        jobs=jobs,
        label=GAME_EVER_HIDE,
        log_cb=log_cb,
        cancel_token=cancel_token,
    )
    est = estimate_advantage(outcomes, conditioning=conditioning)
    r_query_rate = sum(1 for o in outcomes if o.queried_point) / n
    _LOG.info(
        "everhide/%s/%s: advantage %.4f +- %.4f, R queried in %.3f of trials",
        strategy.name, hybrid_mode, est.advantage, est.ci95, r_query_rate,
    )
    return GameReport(
        game=GAME_EVER_HIDE,
        strategy=strategy.name,
        params=params.to_json(),
        seed=int(seed),
        estimate=est,
        extras={"mode": hybrid_mode, "r_query_rate": r_query_rate},
        elapsed_s=time.perf_counter() - t0,
    )


def _c_hide_trial(strategy: AdversaryStrategy, params: CommitParams, seed: int) -> GameOutcome:
    rng = np.random.default_rng(seed)
    b = int(rng.integers(0, 2))
    messages = _check_messages(*strategy.choose_messages(params.msg_len, rng), params.msg_len)
    oracles = params.new_oracles(rng)
    com, _, _ = ccd_commit(messages[b], rng, oracles, params)
    ctx = GameContext(GAME_C_HIDE, params, messages, oracles)
    action = strategy.act_on_challenge([CommitmentView(com)], ctx, rng)
    return GameOutcome(b, True, int(strategy.final_guess(action, None, ctx, rng)))


def exp_c_hide(
    strategy: AdversaryStrategy,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    require_support(strategy, GAME_C_HIDE)
    n = _check_trials(trials)
    t0 = time.perf_counter()
    outcomes = run_trials(
        partial(_c_hide_trial, strategy, params), n, seed, jobs=jobs, label=GAME_C_HIDE, log_cb=log_cb, cancel_token=cancel_token
    )
    est = estimate_advantage(outcomes)
    return GameReport(GAME_C_HIDE, strategy.name, params.to_json(), int(seed), est, elapsed_s=time.perf_counter() - t0)


def _unpre_trial(strategy: AdversaryStrategy, params: CommitParams, seed: int) -> bool:
    rng = np.random.default_rng(seed)
    oracles = params.new_oracles(rng)
    r = random_bits(rng, params.s)
    f = commit_classical(r, random_bits(rng, params.t), oracles.commit)
    ctx = GameContext(GAME_UNPRE, params, (r[:0], r[:0]), oracles)
    guess = strategy.predict_opening(f, ctx, rng)
    return guess is not None and np.array_equal(as_bits(guess), r)


def exp_unpre(
    strategy: AdversaryStrategy,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Unpredictability: the adversary sees f = commit(R; R') and wins by naming R."""
    require_support(strategy, GAME_UNPRE)
    n = _check_trials(trials)
    t0 = time.perf_counter()
    wins = run_trials(
        partial(_unpre_trial, strategy, params), n, seed, jobs=jobs, label=GAME_UNPRE, log_cb=log_cb, cancel_token=cancel_token
    )
    est = estimate_rate(wins, blind_guess_rate=2.0 ** -int(params.s))
    return GameReport(GAME_UNPRE, strategy.name, params.to_json(), int(seed), est, elapsed_s=time.perf_counter() - t0)


def _bit_ever_hide_trial(strategy: AdversaryStrategy, n_bits: int, params: CommitParams, seed: int) -> GameOutcome:
    rng = np.random.default_rng(seed)
    b = int(rng.integers(0, 2))
    messages = _check_messages(*strategy.choose_messages(n_bits, rng), n_bits)
    oracles = params.new_oracles(rng)
    commits = [ccd_commit(messages[b][i:i + 1], rng, oracles, params) for i in range(n_bits)]

    ctx = GameContext(GAME_BIT_EVER_HIDE, params, messages, oracles)
    action = strategy.act_on_challenge([CommitmentView(com) for com, _, _ in commits], ctx, rng)
    if len(action.certs) != n_bits:
        _LOG.info("bit-ever-hide: %d certificates for %d commitments", len(action.certs), n_bits)
        return GameOutcome(b, False, None)
    accepted = all(_cert_accepted(key.ck, cert) for (_, _, key), cert in zip(commits, action.certs))
    if not accepted:
        return GameOutcome(b, False, None)
    reveals = [Reveal(key.ck, d) for _, d, key in commits]
    return GameOutcome(b, True, int(strategy.final_guess(action, reveals, ctx, rng)))


def exp_bit_ever_hide(
    strategy: AdversaryStrategy,
    n: int,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    conditioning: str = "none",
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """n single-bit commitments to the bits of m_b; keys and openings are revealed only if every certificate passes."""
    require_support(strategy, GAME_BIT_EVER_HIDE)
    if int(n) < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    bit_params = params.for_bits()
    count = _check_trials(trials)
    t0 = time.perf_counter()
    outcomes = run_trials(
        partial(_bit_ever_hide_trial, strategy, int(n), bit_params),
        count,
        seed,
        jobs=jobs,
        label=GAME_BIT_EVER_HIDE,
        log_cb=log_cb,
        cancel_token=cancel_token,
    )
    est = estimate_advantage(outcomes, conditioning=conditioning)
    return GameReport(
        GAME_BIT_EVER_HIDE,
        strategy.name,
        {**bit_params.to_json(), "n": int(n)},
        int(seed),
        est,
        elapsed_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Protocol estimators
# ---------------------------------------------------------------------------


def _accept_trial(instance: Instance, prover: ProverStrategy, verifier: VerifierStrategy, params: CommitParams, seed: int) -> tuple[bool, bool]:
    t = run_protocol(instance, prover, verifier, params, np.random.default_rng(seed))
    return t.prover_out, t.verifier_out


def _require_kind(instance: Instance, kind: str) -> None:
    if instance.kind != kind:
        raise InstanceError(f"instance {instance.name or '<unnamed>'} is a {instance.kind}-instance, expected {kind}")


def estimate_completeness(
    instance: Instance,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Honest prover with the instance witness against the honest verifier."""
    _require_kind(instance, "yes")
    instance.require_witness()
    n = _check_trials(trials)
    t0 = time.perf_counter()
    runs = run_trials(
        partial(_accept_trial, instance, ProverStrategy(), VerifierStrategy(), params),
        n, seed, jobs=jobs, label="completeness", log_cb=log_cb, cancel_token=cancel_token,
    )
    est = estimate_rate(
        [v for _, v in runs],
        prover_accept_rate=sum(1 for p, _ in runs if p) / n,
        witness_acceptance=min(instance.witness_acceptance()),
    )
    return GameReport("completeness", "honest", params.to_json(), int(seed), est, {"instance": instance.name}, time.perf_counter() - t0)


def estimate_soundness(
    instance: Instance,
    cheater: ProverStrategy,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Acceptance rate of ``cheater`` on a no-instance, next to the best rate any committed state achieves."""
    _require_kind(instance, "no")
    n = _check_trials(trials)
    t0 = time.perf_counter()
    runs = run_trials(
        partial(_accept_trial, instance, cheater, VerifierStrategy(), params),
        n, seed, jobs=jobs, label="soundness", log_cb=log_cb, cancel_token=cancel_token,
    )
    est = estimate_rate([v for _, v in runs], soundness_bound=soundness_bound(instance))
    return GameReport("soundness", cheater.name, params.to_json(), int(seed), est, {"instance": instance.name}, time.perf_counter() - t0)


def _sequential_trial(
    instance: Instance, prover: ProverStrategy, rounds: int, params: CommitParams, seed: int
) -> tuple[bool, int]:
    res = run_sequential(instance, rounds, prover, VerifierStrategy(), params, np.random.default_rng(seed))
    return res.verifier_out, sum(1 for t in res.transcripts if t.verifier_out)


def estimate_sequential(
    instance: Instance,
    prover: ProverStrategy,
    rounds: int,
    params: CommitParams,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Rate at which all ``rounds`` sequential runs accept; on a no-instance it should stay near bound**rounds."""
    if int(rounds) < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    n = _check_trials(trials)
    t0 = time.perf_counter()
    runs = run_trials(
        partial(_sequential_trial, instance, prover, int(rounds), params),
        n, seed, jobs=jobs, label="sequential", log_cb=log_cb, cancel_token=cancel_token,
    )
    extras: dict[str, Any] = {"rounds": int(rounds), "round_accept_rate": sum(k for _, k in runs) / (n * int(rounds))}
    if instance.kind == "no":
        extras["repeated_bound"] = soundness_bound(instance) ** int(rounds)
    est = estimate_rate([ok for ok, _ in runs], **extras)
    return GameReport("sequential", prover.name, params.to_json(), int(seed), est, {"instance": instance.name}, time.perf_counter() - t0)


def _real_observable(
    instance: Instance, verifier: VerifierStrategy, params: CommitParams, aux: dict[str, Any] | None,
    projection: str, certify: bool, seed: int,
) -> Any:
    t = run_protocol(instance, ProverStrategy(), verifier, params, np.random.default_rng(seed), aux=aux)
    return t.observable(projection=projection, certify=certify)


def _s3_observable(
    instance: Instance, verifier: VerifierStrategy, params: CommitParams, aux: dict[str, Any] | None,
    projection: str, certify: bool, seed: int,
) -> tuple[Any, int]:
    res = simulator_s3(instance, verifier, params, np.random.default_rng(seed), aux, certify=certify)
    return res.observable(projection=projection, certify=certify), res.attempts


def _s12_observable(
    use_witness: bool, instance: Instance, verifier: VerifierStrategy, params: CommitParams,
    aux: dict[str, Any] | None, projection: str, certify: bool, seed: int,
) -> Any | None:
    sim = simulator_s2 if use_witness else simulator_s1
    res = sim(instance, verifier, params, np.random.default_rng(seed), aux, certify=certify)
    return res.observable(projection=projection, certify=certify) if res.ok else None


def _successful_runs(
    trial: Callable[[int], T | None],
    wanted: int,
    seed: int,
    *,
    per_success: int,
    label: str,
    jobs: int,
    log_cb: Callable[[str], None] | None,
    cancel_token: CancelToken | None,
) -> tuple[list[T], int]:
    """Draw batches of ``trial`` until ``wanted`` runs succeed (return non-None).

    Batch ``k`` uses master seed ``derive_seed(seed, k)`` and its size depends only
    on how many successes are still missing, so the outcome does not depend on
    ``jobs``. Returns the first ``wanted`` successes and the attempts consumed.
    """
    got: list[T] = []
    attempts = 0
    for batch in range(_MAX_SUCCESS_BATCHES):
        need = wanted - len(got)
        size = max(MIN_TRIALS, (need * per_success * 11) // 10 + 1)
        raw = run_trials(trial, size, derive_seed(seed, batch), jobs=jobs, label=label, log_cb=log_cb, cancel_token=cancel_token)
        for obs in raw:
            attempts += 1
            if obs is not None:
                got.append(obs)
                if len(got) == wanted:
                    return got, attempts
    raise RuntimeError(f"{label}: only {len(got)} of {wanted} simulator runs succeeded in {attempts} attempts")


def estimate_zk_distance(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    samples: int,
    seed: int,
    *,
    compare: str = "real-vs-s3",
    projection: str = "weights",
    certify: bool = True,
    aux: dict[str, Any] | None = None,
    jobs: int = 1,
    log_cb: Callable[[str], None] | None = None,
    cancel_token: CancelToken | None = None,
) -> GameReport:
    """Empirical TV distance between two output distributions of the proof.

    ``real-vs-s3`` compares the real interaction with the retrying simulator;
    ``s1-vs-s2`` compares the two single-shot simulators on their successful
    runs; there ``samples`` counts successes per simulator and the attempts
    used are reported next to the distance. With ``certify=False`` only the
    verifier's output is compared.
    """
    if compare not in ZK_COMPARISONS:
        raise ValueError(f"unknown comparison {compare!r} (known: {', '.join(ZK_COMPARISONS)})")
    _require_kind(instance, "yes")
    instance.require_witness()
    n = _check_trials(samples)
    t0 = time.perf_counter()
    run = partial(run_trials, trials=n, jobs=jobs, log_cb=log_cb, cancel_token=cancel_token)

    extras: dict[str, Any] = {"compare": compare, "projection": projection, "certify": bool(certify)}
    if compare == "real-vs-s3":
        left = run(partial(_real_observable, instance, verifier, params, aux, projection, certify), seed=derive_seed(seed, 0), label="zk-real")
        sims = run(partial(_s3_observable, instance, verifier, params, aux, projection, certify), seed=derive_seed(seed, 1), label="zk-s3")
        right = [obs for obs, _ in sims]
        extras["s3_mean_attempts"] = float(np.mean([a for _, a in sims]))
    else:
        collect = partial(_successful_runs, wanted=n, per_success=instance.m, jobs=jobs, log_cb=log_cb, cancel_token=cancel_token)
        left, tries_l = collect(partial(_s12_observable, False, instance, verifier, params, aux, projection, certify), seed=derive_seed(seed, 0), label="zk-s1")
        right, tries_r = collect(partial(_s12_observable, True, instance, verifier, params, aux, projection, certify), seed=derive_seed(seed, 1), label="zk-s2")
        extras["s1_attempts"] = tries_l
        extras["s2_attempts"] = tries_r
        extras["s1_success_rate"] = n / tries_l
        extras["s2_success_rate"] = n / tries_r

    est = estimate_tv(left, right, np.random.default_rng(derive_seed(seed, 2)), **extras)
    _LOG.info("zk %s on %s: tv %.4f +- %.4f", compare, instance.name, est.tv, est.ci95)
    return GameReport("zk", verifier.name, params.to_json(), int(seed), est, {"instance": instance.name}, time.perf_counter() - t0)


def _s1_success_trial(instance: Instance, verifier: VerifierStrategy, params: CommitParams, aux: dict[str, Any] | None, seed: int) -> bool:
    return simulator_s1(instance, verifier, params, np.random.default_rng(seed), aux).ok


def estimate_s1_success(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    samples: int,
    seed: int,
    *,
    aux: dict[str, Any] | None = None,
    jobs: int = 1,
) -> RateEstimate:
    """Fraction of single-shot simulations whose guessed challenge matches the verifier's (about 1/m)."""
    n = _check_trials(samples)
    flags = run_trials(partial(_s1_success_trial, instance, verifier, params, aux), n, seed, jobs=jobs, label="s1")
    return estimate_rate(flags, expected=1.0 / instance.m)


def mask_hiding_distance(state: DenseState, copies: int, seed: int) -> float:
    """Frobenius distance between the average of ``copies`` random Pauli maskings of ``state`` and I/2^n."""
    avg = masked_average(state, int(copies), np.random.default_rng(seed))
    target = np.eye(state.dim, dtype=np.complex128) / state.dim
    return float(np.linalg.norm(avg.rho - target))


# ---------------------------------------------------------------------------
# Binding audits
# ---------------------------------------------------------------------------


def audit_binding(params: CommitParams, commits: int, seed: int) -> GameReport:
    """Search every commitment's f for openings; binding holds when each has exactly one.

    The search uses ``find_openings``: sampled oracle points are compared and the
    unsampled remainder is sampled by a lazy binomial draw (reported as ``search``).
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    oracles = params.new_oracles(rng)
    unique = extracted = foreign = collisions = 0
    for _ in range(int(commits)):
        com, d, _ = ccd_commit(random_bits(rng, params.msg_len), rng, oracles, params)
        openings = find_openings(com.f, oracles.commit, params.s, params.t)
        distinct = {r.tobytes() for r, _ in openings}
        if len(distinct) == 1:
            unique += 1
        else:
            collisions += 1
        try:
            if np.array_equal(ccd_extract(com.f, oracles, params), d.d1):
                extracted += 1
        except RuntimeError as e:
            _LOG.warning("binding audit: %s", e)
        for r, r2 in openings:
            if not np.array_equal(r, d.d1) and ccd_verify1(com, CcdDecommitment(r, r2), oracles):
                foreign += 1
        flipped = d.d1.copy()
        flipped[0] ^= 1
        if ccd_verify1(com, CcdDecommitment(flipped, d.d2), oracles):
            foreign += 1
    extras = {
        "commits": int(commits),
        "unique_openings": unique,
        "extractor_matches": extracted,
        "foreign_openings_accepted": foreign,
        "collisions": collisions,
        "search": OPENING_SEARCH,
    }
    return GameReport("binding", "extractor", params.to_json(), int(seed), None, extras, time.perf_counter() - t0)


def audit_sum_binding(params: CommitParams, commits: int, seed: int, *, repeats: int = 8) -> GameReport:
    """Max over openings of Pr[open to 0] plus max over openings of Pr[open to 1], per single-bit commitment.

    Probabilities are estimated over ``repeats`` independent copies of the
    quantum part. The worst commitment is reported as ``max_sum``.
    """
    t0 = time.perf_counter()
    bit_params = params.for_bits()
    rng = np.random.default_rng(seed)
    oracles = bit_params.new_oracles(rng)
    worst = 0.0
    for _ in range(int(commits)):
        com, d, _ = ccd_commit(random_bits(rng, 1), rng, oracles, bit_params)
        candidates = [CcdDecommitment(r, r2) for r, r2 in find_openings(com.f, oracles.commit, bit_params.s, bit_params.t)]
        candidates.append(CcdDecommitment(random_bits(rng, bit_params.s), random_bits(rng, bit_params.t)))
        best = [0.0, 0.0]
        for cand in candidates:
            for bit in (0, 1):
                hits = sum(ccd_verify_sum(com.copy(), cand, bit, oracles, bit_params, rng) for _ in range(int(repeats)))
                best[bit] = max(best[bit], hits / int(repeats))
        worst = max(worst, best[0] + best[1])
    extras = {"commits": int(commits), "repeats": int(repeats), "max_sum": worst}
    return GameReport("sum-binding", "extractor", bit_params.to_json(), int(seed), None, extras, time.perf_counter() - t0)

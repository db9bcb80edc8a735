from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .commitment import CommitParams
from .constants import ENV_LOG_FILE, ENV_SEED, PRESET_DEFAULT, PRESETS
from .experiments import (
    GameReport,
    HYBRID_MODES,
    ZK_COMPARISONS,
    audit_binding,
    audit_sum_binding,
    estimate_completeness,
    estimate_s1_success,
    estimate_sequential,
    estimate_soundness,
    estimate_zk_distance,
    exp_bit_ever_hide,
    exp_c_hide,
    exp_ever_hide,
    exp_otcd,
    exp_unpre,
    mask_hiding_distance,
)
from .file_utils import sha256_file, write_text_atomic
from .instances import Instance, bundled_instances, load_instance, soundness_bound
from .protocol import PROVERS, VERIFIERS, get_prover, get_verifier, run_protocol, run_sequential
from .stats import CONDITIONINGS
from .strategies import STRATEGY_OPTIONS, get_strategy
from .util import dumps_pretty, entropy_seed, env_bool, env_int

_LOG = logging.getLogger(__name__)

GAMES = (
    "otcd",
    "everhide",
    "chide",
    "unpre",
    "biteverhide",
    "completeness",
    "soundness",
    "sequential",
    "zk",
    "s1-success",
    "binding",
    "sum-binding",
    "mask-hiding",
)


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _resolve_seed(args: argparse.Namespace) -> int:
    """EVERCOMMIT_SEED beats --seed; 0 means draw one from the OS and say so on stderr."""
    seed = env_int(ENV_SEED)
    if seed is None:
        seed = int(args.seed)
    if seed < 0:
        raise CliError(f"seed must be non-negative, got {seed}")
    if seed == 0:
        seed = entropy_seed()
        print(f"[seed] derived seed {seed}", file=sys.stderr)
    return seed


def _params(args: argparse.Namespace) -> CommitParams:
    return CommitParams.from_preset(
        args.preset,
        msg_len=args.msg_len,
        mu=args.mu,
        mu_comp=args.mu_comp,
        s=args.s,
        t=args.t,
        threshold=args.threshold,
    )


def _load_instance(name: str | None) -> tuple[Instance, dict[str, Any]]:
    if not name:
        raise CliError("--instance is required for this command")
    p = Path(name)
    bundled = bundled_instances()
    if not p.suffix and not p.exists() and name in bundled:
        return bundled[name], {"instance": name, "instance_sha256": None}
    inst = load_instance(p)
    return inst, {"instance": str(p), "instance_sha256": sha256_file(p)}


def _config(args: argparse.Namespace, seed: int, **extra: Any) -> dict[str, Any]:
    cfg: dict[str, Any] = {"command": args.cmd, "seed": seed}
    if hasattr(args, "preset"):
        cfg["preset"] = args.preset
    cfg.update(extra)
    return cfg


def _emit(obj: Any, out: str | None) -> None:
    text = dumps_pretty(obj)
    print(text)
    if out:
        write_text_atomic(Path(out), text + "\n")


def _aux(args: argparse.Namespace) -> dict[str, Any] | None:
    if getattr(args, "challenge", None) is None:
        return None
    c = int(args.challenge)
    if c < 1:
        raise CliError(f"--challenge is 1-based, got {c}")
    return {"challenge": c - 1}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_run(args: argparse.Namespace) -> int:
    """Run the three-round proof once (or --rounds times in sequence). Exit 0 iff the verifier accepts."""
    instance, inst_cfg = _load_instance(args.instance)
    params = _params(args)
    seed = _resolve_seed(args)
    prover = get_prover(args.cheater)
    verifier = get_verifier(args.verifier)
    rng = np.random.default_rng(seed)
    aux = _aux(args)

    cfg = _config(
        args, seed, params=params.to_json(), prover=prover.name, verifier=verifier.name, rounds=int(args.rounds), **inst_cfg
    )
    if int(args.rounds) == 1:
        t = run_protocol(instance, prover, verifier, params, rng, aux=aux, seed=seed)
        out = t.to_json(debug=bool(args.debug_transcript))
        accepted = t.verifier_out
    else:
        res = run_sequential(instance, int(args.rounds), prover, verifier, params, rng, aux=aux, seed=seed)
        out = res.to_json(debug=bool(args.debug_transcript))
        accepted = res.verifier_out
    out["config"] = cfg
    _emit(out, args.out)
    _LOG.info("run %s: verifier %s", instance.name, "accepts" if accepted else "rejects")
    return 0 if accepted else 1


def _strategy_options(args: argparse.Namespace) -> dict[str, Any]:
    allowed = STRATEGY_OPTIONS.get(args.strategy, ())
    return {k: getattr(args, k) for k in allowed if getattr(args, k, None) is not None}


def _run_game(args: argparse.Namespace, seed: int) -> GameReport | dict[str, Any]:
    game = args.game
    params = _params(args)
    trials = int(args.trials)
    common: dict[str, Any] = {"jobs": int(args.jobs), "log_cb": _progress}

    if game in ("otcd", "everhide", "chide", "unpre", "biteverhide"):
        strategy = get_strategy(args.strategy, **_strategy_options(args))
        if game == "otcd":
            return exp_otcd(strategy, params.ske, trials, seed, conditioning=args.conditioning, **common)
        if game == "everhide":
            return exp_ever_hide(
                strategy, params, trials, seed, hybrid_mode=args.mode, conditioning=args.conditioning, **common
            )
        if game == "chide":
            return exp_c_hide(strategy, params, trials, seed, **common)
        if game == "unpre":
            return exp_unpre(strategy, params, trials, seed, **common)
        return exp_bit_ever_hide(strategy, int(args.bits), params, trials, seed, conditioning=args.conditioning, **common)

    if game == "binding":
        return audit_binding(params, int(args.commits), seed)
    if game == "sum-binding":
        return audit_sum_binding(params, int(args.commits), seed, repeats=int(args.repeats))

    instance, _ = _load_instance(args.instance)
    verifier = get_verifier(args.verifier)
    if game == "completeness":
        return estimate_completeness(instance, params, trials, seed, **common)
    if game == "soundness":
        return estimate_soundness(instance, get_prover(args.cheater), params, trials, seed, **common)
    if game == "sequential":
        return estimate_sequential(instance, get_prover(args.cheater), int(args.rounds), params, trials, seed, **common)
    if game == "zk":
        return estimate_zk_distance(
            instance,
            verifier,
            params,
            trials,
            seed,
            compare=args.compare,
            projection=args.projection,
            certify=not bool(args.no_certify),
            aux=_aux(args),
            **common,
        )
    if game == "s1-success":
        est = estimate_s1_success(instance, verifier, params, trials, seed, aux=_aux(args), jobs=int(args.jobs))
        return GameReport("s1-success", verifier.name, params.to_json(), seed, est, {"instance": instance.name})
    # mask-hiding
    dist = mask_hiding_distance(instance.require_witness(), int(args.copies), seed)
    return {"game": "mask-hiding", "instance": instance.name, "copies": int(args.copies), "frobenius_distance": dist, "seed": seed}


def _progress(msg: str) -> None:
    _LOG.info(msg)


def _cmd_game(args: argparse.Namespace) -> int:
    """Run a security game, estimator or audit and print its JSON report."""
    seed = _resolve_seed(args)
    report = _run_game(args, seed)
    out: dict[str, Any] = report.to_json() if isinstance(report, GameReport) else dict(report)

    extra: dict[str, Any] = {"game": args.game, "trials": int(args.trials), "jobs": int(args.jobs)}
    if args.game in ("otcd", "everhide", "chide", "unpre", "biteverhide"):
        extra["strategy"] = args.strategy
        extra["strategy_options"] = _strategy_options(args)
    if args.instance:
        _, inst_cfg = _load_instance(args.instance)
        extra.update(inst_cfg)
    out["config"] = _config(args, seed, params=_params(args).to_json(), **extra)
    _emit(out, args.out)
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    """Print the soundness bound (largest eigenvalue of the averaged check operator) to 6 decimals."""
    instance, inst_cfg = _load_instance(args.instance)
    value = soundness_bound(instance)
    print(f"{value:.6f}")
    if args.out:
        rep = {"bound": round(value, 6), "config": {"command": args.cmd, **inst_cfg}, "kind": instance.kind, "n": instance.n, "m": instance.m}
        write_text_atomic(Path(args.out), dumps_pretty(rep) + "\n")
    return 0


def _cmd_make_instance(args: argparse.Namespace) -> int:
    """Write the bundled instances (ghz.json, frustrated.json) into --out."""
    out_dir = Path(args.out)
    written = []
    for name, inst in bundled_instances().items():
        p = write_text_atomic(out_dir / f"{name}.json", dumps_pretty(inst.to_json()) + "\n")
        written.append({"name": name, "path": str(p), "sha256": sha256_file(p)})
    print(dumps_pretty({"written": written, "config": {"command": args.cmd, "out": str(out_dir)}}))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("parameters")
    g.add_argument("--preset", choices=sorted(PRESETS), default=PRESET_DEFAULT, help="Parameter preset (default: default).")
    g.add_argument("--msg-len", type=int, default=None, help="Message length n in bits.")
    g.add_argument("--mu", type=int, default=None, help="BB84 qubits per ciphertext.")
    g.add_argument("--mu-comp", type=int, default=None, help="Computational-basis positions (default: mu/2).")
    g.add_argument("--s", type=int, default=None, help="Opening length |R|.")
    g.add_argument("--t", type=int, default=None, help="Randomness length |R'|.")
    g.add_argument("--threshold", type=int, default=None, help="Tolerated certificate mismatches.")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help=f"Master seed; 0 draws one from the OS ({ENV_SEED} overrides).")
    p.add_argument("--out", default=None, help="Also write the JSON result to this file.")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-file", action="store_true", help=f"Write a per-run log under ./logs (or set {ENV_LOG_FILE}=1).")

    p = argparse.ArgumentParser(
        prog="evercommit",
        description="Certified-everlasting commitments, certified-deletion encryption and a zero-knowledge proof, simulated at desk scale.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", parents=[common], help="Run the three-round proof on an instance.")
    p_run.add_argument("--instance", required=True, help="Instance JSON file (or a bundled name: ghz, frustrated).")
    p_run.add_argument("--cheater", default="honest", help=f"Prover strategy (default: honest; known: {', '.join(sorted(PROVERS))}).")
    p_run.add_argument("--verifier", default="honest", help=f"Verifier strategy (known: {', '.join(sorted(VERIFIERS))}).")
    p_run.add_argument("--challenge", type=int, default=None, help="Check index (1-based) for the fixed-challenge verifier.")
    p_run.add_argument("--rounds", type=int, default=1, help="Sequential repetitions (default: 1).")
    p_run.add_argument("--debug-transcript", action="store_true", help="Include BB84 internals in the transcript.")
    _add_run_flags(p_run)
    _add_param_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_game = sub.add_parser("game", parents=[common], help="Run a security game, protocol estimator or audit.")
    p_game.add_argument("game", choices=GAMES, help="Which experiment to run.")
    p_game.add_argument("--strategy", default="random", help="Adversary strategy for the hiding/deletion/unpredictability games.")
    p_game.add_argument("--trials", type=int, default=1000, help="Trials or samples (default: 1000, minimum 100).")
    p_game.add_argument("--jobs", type=int, default=1, help="Worker processes (default: 1).")
    p_game.add_argument("--mode", choices=HYBRID_MODES, default="real", help="everhide: real game or a hybrid.")
    p_game.add_argument("--conditioning", choices=CONDITIONINGS, default="none", help="Advantage over all trials or accepted certificates only.")
    p_game.add_argument("--bits", type=int, default=8, help="biteverhide: number of single-bit commitments.")
    p_game.add_argument("--fraction", type=float, default=None, help="partial-measure: fraction of qubits measured.")
    p_game.add_argument("--forge", type=int, default=None, help="cert-forger: number of challenge states kept.")
    p_game.add_argument("--budget", type=int, default=None, help="no-query-guess: oracle queries allowed.")
    p_game.add_argument("--instance", default=None, help="Instance for protocol estimators.")
    p_game.add_argument("--cheater", default="optimal-eigenvector", help="soundness/sequential: prover strategy.")
    p_game.add_argument("--verifier", default="honest", help="zk/s1-success: verifier strategy.")
    p_game.add_argument("--challenge", type=int, default=None, help="Check index (1-based) for the fixed-challenge verifier.")
    p_game.add_argument("--rounds", type=int, default=8, help="sequential: repetitions per trial (default: 8).")
    p_game.add_argument("--compare", choices=ZK_COMPARISONS, default="real-vs-s3", help="zk: which pair of distributions.")
    p_game.add_argument("--projection", choices=("weights", "full"), default="weights", help="zk: observable projection.")
    p_game.add_argument("--no-certify", action="store_true", help="zk: compare verifier output only (no certificate step).")
    p_game.add_argument("--commits", type=int, default=100, help="binding audits: commitments to scan.")
    p_game.add_argument("--repeats", type=int, default=8, help="sum-binding: copies per opening attempt.")
    p_game.add_argument("--copies", type=int, default=1000, help="mask-hiding: masked copies averaged.")
    _add_run_flags(p_game)
    _add_param_flags(p_game)
    p_game.set_defaults(func=_cmd_game)

    p_bound = sub.add_parser("bound", parents=[common], help="Print the soundness bound of an instance.")
    p_bound.add_argument("--instance", required=True, help="Instance JSON file (or a bundled name).")
    p_bound.add_argument("--out", default=None, help="Also write a JSON report to this file.")
    p_bound.set_defaults(func=_cmd_bound)

    p_mk = sub.add_parser("make-instance", parents=[common], help="Write the bundled instances to files.")
    p_mk.add_argument("--out", default=".", help="Output folder (default: current folder).")
    p_mk.set_defaults(func=_cmd_make_instance)
    return p


def main(argv: list[str] | None = None) -> int:
    p = _build_parser()
    args = p.parse_args(argv)

    if bool(getattr(args, "log_file", False)) or env_bool(ENV_LOG_FILE):
        try:
            from .app_logging import init_app_logging
            init_app_logging(component=str(args.cmd).replace("-", "_"))
        except Exception:
            pass

    try:
        rv = args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        # No handlers means logging.lastResort, which also writes to stderr.
        if _LOG.hasHandlers():
            _LOG.error("%s failed: %s", args.cmd, msg)
        print(f"{args.cmd} failed: {msg}", file=sys.stderr)
        return 2
    if rv is None:
        return 0
    try:
        return int(rv)
    except Exception:
        return 1

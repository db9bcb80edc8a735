"""Three-round proof with certified-everlasting zero knowledge.

Round 1 (prover): pick pads x, z; send X^x Z^z rho Z^z X^x together with
bit commitments to every x_i and z_i.
Round 2 (verifier): pick a check c; delete the pad commitments outside S_c and
return the deletion certificates.
Round 3 (prover): open the pad commitments on S_c; accept iff every
certificate verifies. The verifier opens, unmasks S_c and measures
{Pi_c, I - Pi_c}.

Provers and verifiers are strategy objects so cheating provers and malicious
verifiers plug into the same driver (``run_protocol``).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .backend import DenseState, PauliMask, apply_pauli_mask, povm_measure, random_state
from .commitment import (
    CcdCommitment,
    CcdDecommitment,
    CcdKey,
    CommitParams,
    ccd_cert,
    ccd_commit,
    ccd_del,
    ccd_verify,
)
from .instances import Instance, optimal_cheating_state
from .oracles import OracleSet
from .ske import SkeDeletionCert, SkeError
from .util import Bits, random_bits

_LOG = logging.getLogger(__name__)


class ProtocolError(ValueError):
    """Malformed protocol message (wrong shapes or commitment counts)."""


class UnknownParty(KeyError):
    """No prover or verifier strategy registered under the requested name."""


def complement(support: Sequence[int], n: int) -> list[int]:
    sup = set(support)
    return [i for i in range(n) if i not in sup]


# ---------------------------------------------------------------------------
# Messages and state
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Msg1:
    masked_state: DenseState
    com_x: list[CcdCommitment]
    com_z: list[CcdCommitment]

    def to_json(self, *, debug: bool = False) -> dict[str, Any]:
        return {
            "masked_state": self.masked_state.to_json(),
            "com_x": [c.to_json(debug=debug) for c in self.com_x],
            "com_z": [c.to_json(debug=debug) for c in self.com_z],
        }


@dataclass(frozen=True, eq=False)
class Msg2:
    c: int
    certs: dict[int, tuple[SkeDeletionCert, SkeDeletionCert]]

    def to_json(self) -> dict[str, Any]:
        return {
            "c": self.c + 1,
            "certs": {str(i + 1): [cx.to_json(), cz.to_json()] for i, (cx, cz) in sorted(self.certs.items())},
        }


@dataclass(frozen=True, eq=False)
class Msg3:
    openings: dict[int, tuple[CcdDecommitment, CcdDecommitment]]

    def to_json(self) -> dict[str, Any]:
        return {
            "openings": {
                str(i + 1): {"x": dx.to_json(), "z": dz.to_json()} for i, (dx, dz) in sorted(self.openings.items())
            }
        }


@dataclass(eq=False)
class PadCommitments:
    com_x: list[CcdCommitment]
    com_z: list[CcdCommitment]
    d_x: list[CcdDecommitment]
    d_z: list[CcdDecommitment]
    keys_x: list[CcdKey]
    keys_z: list[CcdKey]


@dataclass(eq=False)
class ProverState:
    instance: Instance
    params: CommitParams
    mask: PauliMask
    pads: PadCommitments


@dataclass(eq=False)
class VerifierState:
    instance: Instance
    params: CommitParams
    c: int
    masked_state: DenseState
    com_x: dict[int, CcdCommitment]
    com_z: dict[int, CcdCommitment]
    opened_x: dict[int, int] = field(default_factory=dict)
    opened_z: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class VerifierOutput:
    """What the verifier ends up with: challenge, opened pad bits on S_c and the POVM verdict."""

    c: int
    accept: bool
    opened_x: tuple[int, ...] = ()
    opened_z: tuple[int, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {"c": self.c + 1, "accept": self.accept, "opened_x": list(self.opened_x), "opened_z": list(self.opened_z)}


Observable = tuple[Any, ...]


def out_prime_observable(
    prover_out: bool | None, view: VerifierOutput | None, *, projection: str = "weights", certify: bool = True
) -> Observable:
    """Classical projection of OUT'.

    With ``certify`` the pair collapses to ("bot",) whenever the prover rejected
    the certificates. ``projection="weights"`` summarises opened pad bits by
    Hamming weight, ``"full"`` keeps them.
    """
    if certify and not prover_out:
        return ("bot",)
    if view is None:
        return ("bot",)
    if projection == "full":
        pads: tuple[Any, ...] = (view.opened_x, view.opened_z)
    elif projection == "weights":
        pads = (sum(view.opened_x), sum(view.opened_z))
    else:
        raise ValueError(f"unknown projection {projection!r}")
    head: tuple[Any, ...] = ("top",) if certify else ()
    return head + (view.c, view.accept) + pads


@dataclass(eq=False)
class Transcript:
    instance: str
    prover: str
    verifier: str
    c: int
    msg1: Msg1
    msg2: Msg2
    msg3: Msg3 | None
    prover_out: bool
    verifier_out: bool
    view: VerifierOutput | None
    seed: int | None = None
    elapsed_s: float = 0.0

    @property
    def out_prime(self) -> tuple[bool, bool | None]:
        return (True, self.verifier_out) if self.prover_out else (False, None)

    def observable(self, *, projection: str = "weights", certify: bool = True) -> Observable:
        return out_prime_observable(self.prover_out, self.view, projection=projection, certify=certify)

    def to_json(self, *, debug: bool = False) -> dict[str, Any]:
        return {
            "instance": self.instance,
            "prover": self.prover,
            "verifier": self.verifier,
            "c": self.c + 1,
            "msg1": self.msg1.to_json(debug=debug),
            "msg2": self.msg2.to_json(),
            "msg3": self.msg3.to_json() if self.msg3 is not None else None,
            "prover_out": self.prover_out,
            "verifier_out": self.verifier_out,
            "verifier_view": self.view.to_json() if self.view is not None else None,
            "seed": self.seed,
            "elapsed_s": self.elapsed_s,
        }


@dataclass(eq=False)
class SequentialResult:
    transcripts: list[Transcript]
    prover_out: bool
    verifier_out: bool

    def to_json(self, *, debug: bool = False) -> dict[str, Any]:
        return {
            "rounds": len(self.transcripts),
            "prover_out": self.prover_out,
            "verifier_out": self.verifier_out,
            "transcripts": [t.to_json(debug=debug) for t in self.transcripts],
        }


# ---------------------------------------------------------------------------
# Honest parties
# ---------------------------------------------------------------------------


def commit_pads(x: Bits, z: Bits, params: CommitParams, oracles: OracleSet, rng: np.random.Generator) -> PadCommitments:
    """One single-bit commitment per pad bit, x first then z for each qubit."""
    bit_params = params.for_bits()
    pads = PadCommitments([], [], [], [], [], [])
    for i in range(int(x.size)):
        cx, dx, kx = ccd_commit(x[i:i + 1], rng, oracles, bit_params)
        cz, dz, kz = ccd_commit(z[i:i + 1], rng, oracles, bit_params)
        pads.com_x.append(cx)
        pads.com_z.append(cz)
        pads.d_x.append(dx)
        pads.d_z.append(dz)
        pads.keys_x.append(kx)
        pads.keys_z.append(kz)
    return pads


def prover_commit(
    instance: Instance,
    params: CommitParams,
    oracles: OracleSet,
    rng: np.random.Generator,
    *,
    witness: DenseState | None = None,
    mask: PauliMask | None = None,
) -> tuple[Msg1, ProverState]:
    """First message. ``witness`` replaces the instance witness (cheaters); ``mask`` forces the pads (tests)."""
    rho = witness if witness is not None else instance.require_witness()
    if rho.num_qubits != instance.n:
        raise ProtocolError(f"witness has {rho.num_qubits} qubits, instance has {instance.n}")
    if mask is None:
        mask = PauliMask(random_bits(rng, instance.n), random_bits(rng, instance.n))
    elif mask.num_qubits != instance.n:
        raise ProtocolError(f"mask has {mask.num_qubits} qubits, instance has {instance.n}")
    pads = commit_pads(mask.x, mask.z, params, oracles, rng)
    msg1 = Msg1(apply_pauli_mask(rho, mask), pads.com_x, pads.com_z)
    return msg1, ProverState(instance, params.for_bits(), mask, pads)


def _validate_msg1(msg1: Msg1, instance: Instance) -> None:
    if msg1.masked_state.num_qubits != instance.n:
        raise ProtocolError(f"first message carries {msg1.masked_state.num_qubits} qubits, instance has {instance.n}")
    if len(msg1.com_x) != instance.n or len(msg1.com_z) != instance.n:
        raise ProtocolError(f"first message needs {instance.n} commitments per pad, got {len(msg1.com_x)}/{len(msg1.com_z)}")


def _delete_outside(
    msg1: Msg1, instance: Instance, params: CommitParams, c: int
) -> tuple[list[int], VerifierState]:
    support = list(instance.check(c).support)
    state = VerifierState(
        instance=instance,
        params=params.for_bits(),
        c=c,
        masked_state=msg1.masked_state,
        com_x={i: msg1.com_x[i] for i in support},
        com_z={i: msg1.com_z[i] for i in support},
    )
    return complement(support, instance.n), state


def verifier_challenge(
    msg1: Msg1, instance: Instance, params: CommitParams, rng: np.random.Generator, *, c: int | None = None
) -> tuple[Msg2, VerifierState]:
    _validate_msg1(msg1, instance)
    if c is None:
        c = int(rng.integers(0, instance.m))
    outside, state = _delete_outside(msg1, instance, params, c)
    certs = {i: (ccd_del(msg1.com_x[i], rng), ccd_del(msg1.com_z[i], rng)) for i in outside}
    return Msg2(c, certs), state


def _cert_ok(cert: SkeDeletionCert, key: CcdKey) -> bool:
    try:
        return ccd_cert(cert, key)
    except SkeError as e:
        _LOG.debug("certificate rejected: %s", e)
        return False


def prover_respond(state: ProverState, msg2: Msg2) -> tuple[Msg3 | None, bool]:
    """Openings on S_c and the prover's verdict on the certificates; (None, False) on an ill-formed challenge."""
    instance = state.instance
    if not 0 <= int(msg2.c) < instance.m:
        _LOG.info("prover abort: challenge %r out of range", msg2.c)
        return None, False
    support = list(instance.check(msg2.c).support)
    outside = complement(support, instance.n)
    if sorted(msg2.certs) != outside:
        _LOG.info("prover abort: certificates indexed by %s, expected %s", sorted(msg2.certs), outside)
        return None, False

    pads = state.pads
    prover_out = all(
        _cert_ok(cx, pads.keys_x[i]) and _cert_ok(cz, pads.keys_z[i]) for i, (cx, cz) in msg2.certs.items()
    )
    msg3 = Msg3({i: (pads.d_x[i], pads.d_z[i]) for i in support})
    return msg3, prover_out


def verifier_verify(
    state: VerifierState, msg3: Msg3 | None, oracles: OracleSet, rng: np.random.Generator
) -> bool:
    if msg3 is None:
        return False
    support = list(state.instance.check(state.c).support)
    if sorted(msg3.openings) != support:
        _LOG.info("verifier abort: openings indexed by %s, expected %s", sorted(msg3.openings), support)
        return False

    n = state.instance.n
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    for i in support:
        dx, dz = msg3.openings[i]
        xi = ccd_verify(state.com_x[i], dx, oracles, state.params, rng)
        zi = ccd_verify(state.com_z[i], dz, oracles, state.params, rng)
        if xi is None or zi is None:
            _LOG.info("verifier abort: pad opening on qubit %d failed", i + 1)
            return False
        x[i], z[i] = int(xi[0]), int(zi[0])
        state.opened_x[i], state.opened_z[i] = int(xi[0]), int(zi[0])

    unmasked = apply_pauli_mask(state.masked_state, PauliMask(x, z))
    accepted, _ = povm_measure(unmasked, state.instance.check(state.c), rng)
    return accepted


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------


class ProverStrategy:
    """Honest prover. Subclasses swap the committed state or tamper with the response."""

    name = "honest"

    def commit(
        self, instance: Instance, params: CommitParams, oracles: OracleSet, rng: np.random.Generator
    ) -> tuple[Msg1, ProverState]:
        return prover_commit(instance, params, oracles, rng)

    def respond(self, state: ProverState, msg2: Msg2) -> tuple[Msg3 | None, bool]:
        return prover_respond(state, msg2)


class OptimalEigenvectorProver(ProverStrategy):
    """Commits honestly to the top eigenvector of the averaged check operator."""

    name = "optimal-eigenvector"

    def commit(self, instance, params, oracles, rng):
        return prover_commit(instance, params, oracles, rng, witness=optimal_cheating_state(instance))


class WrongWitnessProver(ProverStrategy):
    name = "honest-but-wrong-witness"

    def commit(self, instance, params, oracles, rng):
        return prover_commit(instance, params, oracles, rng, witness=DenseState.basis_state("0" * instance.n))


class RandomWitnessProver(ProverStrategy):
    name = "random-witness"

    def commit(self, instance, params, oracles, rng):
        return prover_commit(instance, params, oracles, rng, witness=random_state(instance.n, rng, rank=1))


class DecommitLiarProver(ProverStrategy):
    """Commits to the optimal state, then opens every pad with a flipped first bit of R."""

    name = "decommit-liar"

    def commit(self, instance, params, oracles, rng):
        witness = instance.witness if instance.witness is not None else optimal_cheating_state(instance)
        return prover_commit(instance, params, oracles, rng, witness=witness)

    def respond(self, state, msg2):
        msg3, prover_out = prover_respond(state, msg2)
        if msg3 is None:
            return None, prover_out
        forged = {i: (_flip_first(dx), _flip_first(dz)) for i, (dx, dz) in msg3.openings.items()}
        return Msg3(forged), prover_out


def _flip_first(d: CcdDecommitment) -> CcdDecommitment:
    d1 = d.d1.copy()
    d1[0] ^= 1
    return CcdDecommitment(d1, d.d2.copy())


class VerifierStrategy:
    """Honest verifier: uniform challenge, honest deletion, honest verification."""

    name = "honest"

    def choose_challenge(self, instance: Instance, rng: np.random.Generator, aux: dict[str, Any]) -> int:
        return int(rng.integers(0, instance.m))

    def challenge(
        self,
        msg1: Msg1,
        instance: Instance,
        params: CommitParams,
        oracles: OracleSet,
        rng: np.random.Generator,
        aux: dict[str, Any] | None = None,
    ) -> tuple[Msg2, VerifierState]:
        c = self.choose_challenge(instance, rng, aux or {})
        return verifier_challenge(msg1, instance, params, rng, c=c)

    def finish(
        self, state: VerifierState, msg3: Msg3 | None, oracles: OracleSet, rng: np.random.Generator
    ) -> VerifierOutput:
        accepted = verifier_verify(state, msg3, oracles, rng)
        support = list(state.instance.check(state.c).support)
        return VerifierOutput(
            c=state.c,
            accept=accepted,
            opened_x=tuple(state.opened_x[i] for i in support if i in state.opened_x),
            opened_z=tuple(state.opened_z[i] for i in support if i in state.opened_z),
        )


class FixedChallengeVerifier(VerifierStrategy):
    """Always asks for check ``aux["challenge"]`` (0-based, default 0)."""

    name = "fixed-challenge"

    def choose_challenge(self, instance, rng, aux):
        return int(aux.get("challenge", 0)) % instance.m


class LazyDeleterVerifier(VerifierStrategy):
    """Keeps the pad commitments intact and sends uniformly random certificates."""

    name = "lazy-deleter"

    def challenge(self, msg1, instance, params, oracles, rng, aux=None):
        _validate_msg1(msg1, instance)
        c = self.choose_challenge(instance, rng, aux or {})
        outside, state = _delete_outside(msg1, instance, params, c)
        mu = int(params.ske.mu)
        certs = {i: (SkeDeletionCert(random_bits(rng, mu)), SkeDeletionCert(random_bits(rng, mu))) for i in outside}
        return Msg2(c, certs), state


PROVERS: dict[str, Callable[[], ProverStrategy]] = {
    "honest": ProverStrategy,
    "optimal-eigenvector": OptimalEigenvectorProver,
    "optimal": OptimalEigenvectorProver,
    "honest-but-wrong-witness": WrongWitnessProver,
    "wrong-witness": WrongWitnessProver,
    "random-witness": RandomWitnessProver,
    "decommit-liar": DecommitLiarProver,
}

VERIFIERS: dict[str, Callable[[], VerifierStrategy]] = {
    "honest": VerifierStrategy,
    "fixed-challenge": FixedChallengeVerifier,
    "lazy-deleter": LazyDeleterVerifier,
}


def get_prover(name: str) -> ProverStrategy:
    try:
        return PROVERS[name]()
    except KeyError as e:
        raise UnknownParty(f"unknown prover {name!r} (known: {', '.join(sorted(PROVERS))})") from e


def get_verifier(name: str) -> VerifierStrategy:
    try:
        return VERIFIERS[name]()
    except KeyError as e:
        raise UnknownParty(f"unknown verifier {name!r} (known: {', '.join(sorted(VERIFIERS))})") from e


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def run_protocol(
    instance: Instance,
    prover: ProverStrategy,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    *,
    oracles: OracleSet | None = None,
    aux: dict[str, Any] | None = None,
    seed: int | None = None,
) -> Transcript:
    t0 = time.perf_counter()
    oracles = oracles if oracles is not None else params.for_bits().new_oracles(rng)
    msg1, pstate = prover.commit(instance, params, oracles, rng)
    msg2, vstate = verifier.challenge(msg1, instance, params, oracles, rng, aux)
    msg3, prover_out = prover.respond(pstate, msg2)
    view = verifier.finish(vstate, msg3, oracles, rng)
    return Transcript(
        instance=instance.name,
        prover=prover.name,
        verifier=verifier.name,
        c=msg2.c,
        msg1=msg1,
        msg2=msg2,
        msg3=msg3,
        prover_out=bool(prover_out),
        verifier_out=bool(view.accept),
        view=view,
        seed=seed,
        elapsed_s=time.perf_counter() - t0,
    )


def run_sequential(
    instance: Instance,
    rounds: int,
    prover: ProverStrategy,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    *,
    aux: dict[str, Any] | None = None,
    seed: int | None = None,
) -> SequentialResult:
    """N independent runs sharing one oracle set; each side accepts iff it accepted every round."""
    if int(rounds) < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    oracles = params.for_bits().new_oracles(rng)
    transcripts = [
        run_protocol(instance, prover, verifier, params, rng, oracles=oracles, aux=aux, seed=seed)
        for _ in range(int(rounds))
    ]
    return SequentialResult(
        transcripts=transcripts,
        prover_out=all(t.prover_out for t in transcripts),
        verifier_out=all(t.verifier_out for t in transcripts),
    )

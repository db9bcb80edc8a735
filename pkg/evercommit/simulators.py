"""Simulators for the three-round proof.

S1 guesses the challenge c, commits to pads that are zero outside S_c and sends
the locally simulated state on S_c (|0> elsewhere) under a full random mask.
It fails when the verifier picks a different challenge. S2 is S1 with the real
witness in place of the local simulation. S3 repeats S2 with fresh randomness
until it does not fail; the retry loop plays the role of rewinding, which is
sound here because verifier auxiliary inputs are classical descriptions that
can be handed over again.

``certify=False`` drops the certificate step: the simulated output is the
verifier's output alone.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .backend import DenseState, PauliMask, apply_pauli_mask, embed_state
from .commitment import CommitParams
from .constants import RETRIES_PER_CHECK
from .instances import Instance, local_sim
from .protocol import (
    Msg1,
    Observable,
    ProverState,
    VerifierOutput,
    VerifierStrategy,
    commit_pads,
    out_prime_observable,
    prover_respond,
)
from .util import random_bits

_LOG = logging.getLogger(__name__)

SUCCESS = "success"
FAIL = "fail"


class RetriesExhausted(RuntimeError):
    def __init__(self, message: str, *, attempts: int) -> None:
        super().__init__(message)
        self.attempts = int(attempts)


@dataclass(frozen=True)
class SimResult:
    """Flag plus simulated OUT'. A failed run carries the all-zeros record (no outputs)."""

    flag: str
    c: int
    prover_out: bool | None = None
    view: VerifierOutput | None = None
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return self.flag == SUCCESS

    def observable(self, *, projection: str = "weights", certify: bool = True) -> Observable:
        if not self.ok:
            raise ValueError("a failed simulation has no output")
        return out_prime_observable(self.prover_out, self.view, projection=projection, certify=certify)

    def to_json(self) -> dict[str, Any]:
        return {
            "flag": self.flag,
            "c": self.c + 1,
            "prover_out": self.prover_out,
            "verifier_view": self.view.to_json() if self.view is not None else None,
            "attempts": self.attempts,
        }


def _simulate(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    aux: dict[str, Any] | None,
    *,
    use_witness: bool,
    certify: bool,
) -> SimResult:
    n = instance.n
    c = int(rng.integers(0, instance.m))
    support = list(instance.check(c).support)

    mask = PauliMask(random_bits(rng, n), random_bits(rng, n))
    committed = mask.restricted(support)

    if use_witness:
        sigma = instance.require_witness()
    else:
        sigma = embed_state(local_sim(instance, support), support, n)

    oracles = params.for_bits().new_oracles(rng)
    pads = commit_pads(committed.x, committed.z, params, oracles, rng)
    msg1 = Msg1(apply_pauli_mask(sigma, mask), pads.com_x, pads.com_z)

    msg2, vstate = verifier.challenge(msg1, instance, params, oracles, rng, aux)
    if int(msg2.c) != c:
        return SimResult(flag=FAIL, c=c)

    state = ProverState(instance, params.for_bits(), committed, pads)
    msg3, prover_out = prover_respond(state, msg2)
    view = verifier.finish(vstate, msg3, oracles, rng)
    if not certify:
        return SimResult(flag=SUCCESS, c=c, prover_out=None, view=view)
    if not prover_out:
        return SimResult(flag=SUCCESS, c=c, prover_out=False, view=None)
    return SimResult(flag=SUCCESS, c=c, prover_out=True, view=view)


def simulator_s1(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    aux: dict[str, Any] | None = None,
    *,
    certify: bool = True,
) -> SimResult:
    return _simulate(instance, verifier, params, rng, aux, use_witness=False, certify=certify)


def simulator_s2(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    aux: dict[str, Any] | None = None,
    *,
    certify: bool = True,
) -> SimResult:
    return _simulate(instance, verifier, params, rng, aux, use_witness=True, certify=certify)


def simulator_s3(
    instance: Instance,
    verifier: VerifierStrategy,
    params: CommitParams,
    rng: np.random.Generator,
    aux: dict[str, Any] | None = None,
    *,
    max_retries: int | None = None,
    certify: bool = True,
) -> SimResult:
    budget = int(max_retries) if max_retries is not None else RETRIES_PER_CHECK * instance.m
    if budget < 1:
        raise ValueError(f"max_retries must be >= 1, got {budget}")
    for attempt in range(1, budget + 1):
        res = simulator_s2(instance, verifier, params, rng, aux, certify=certify)
        if res.ok:
            return SimResult(res.flag, res.c, res.prover_out, res.view, attempts=attempt)
    _LOG.warning("simulator gave up after %d attempts", budget)
    raise RetriesExhausted(f"no non-failing simulation within {budget} attempts", attempts=budget)


def masked_average(state: DenseState, copies: int, rng: np.random.Generator) -> DenseState:
    """Average of ``copies`` independently masked copies of ``state``."""
    n = state.num_qubits
    acc = np.zeros((state.dim, state.dim), dtype=np.complex128)
    for _ in range(int(copies)):
        acc += apply_pauli_mask(state, PauliMask(random_bits(rng, n), random_bits(rng, n))).rho
    return DenseState(n, acc / int(copies))

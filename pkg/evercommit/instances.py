"""Toy locally simulatable instances: checks, witnesses, file format and soundness bounds.

Instance files use 1-based qubit indices and strictly ascending supports:

    {"n": 3, "kind": "yes",
     "checks": [{"support": [1, 2], "projector": [[[re, im], ...], ...]}, ...],
     "witness": {"n": 3, "rho": [...]}}
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.sparse.linalg import eigsh

from .backend import (
    BackendError,
    DenseState,
    Povm,
    embed_operator,
    embed_operator_sparse,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    povm_prob,
)
from .constants import DENSE_QUBIT_CAP, MAX_CHECK_SUPPORT, TOL

_LOG = logging.getLogger(__name__)

# Dense eigensolver up to this many qubits, Lanczos above.
_DENSE_EIG_MAX_QUBITS = 8


class InstanceError(ValueError):
    """Malformed instance, dimension cap exceeded, or missing witness."""


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    checks: tuple[Povm, ...]
    kind: str = "yes"
    witness: DenseState | None = None
    name: str = field(default="")

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise InstanceError("instance needs at least one qubit")
        if int(self.n) > DENSE_QUBIT_CAP:
            raise InstanceError(f"dimension cap exceeded: {self.n} qubits > {DENSE_QUBIT_CAP}")
        if self.kind not in ("yes", "no"):
            raise InstanceError(f"kind must be 'yes' or 'no', got {self.kind!r}")
        if not self.checks:
            raise InstanceError("instance has no checks")
        for c, povm in enumerate(self.checks):
            sup = povm.support
            if len(sup) > MAX_CHECK_SUPPORT:
                raise InstanceError(f"check {c}: support of {len(sup)} qubits exceeds {MAX_CHECK_SUPPORT}")
            if max(sup) >= self.n:
                raise InstanceError(f"check {c}: support {list(sup)} out of range for {self.n} qubits")
            if list(sup) != sorted(sup):
                raise InstanceError(f"check {c}: support must be strictly ascending")
        if self.witness is not None and self.witness.num_qubits != self.n:
            raise InstanceError(f"witness has {self.witness.num_qubits} qubits, instance has {self.n}")

    @property
    def m(self) -> int:
        return len(self.checks)

    def check(self, c: int) -> Povm:
        return self.checks[c]

    def require_witness(self) -> DenseState:
        if self.witness is None:
            raise InstanceError(f"instance {self.name or '<unnamed>'} has no witness")
        return self.witness

    def witness_acceptance(self) -> list[float]:
        rho = self.require_witness()
        return [povm_prob(rho, povm) for povm in self.checks]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "n": int(self.n),
            "kind": self.kind,
            "checks": [
                {"support": [q + 1 for q in povm.support], "projector": matrix_to_json(povm.projector)}
                for povm in self.checks
            ],
        }
        if self.name:
            out["name"] = self.name
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def instance_from_json(obj: Any, *, name: str = "") -> Instance:
    if not isinstance(obj, dict):
        raise InstanceError("instance file must hold a JSON object")
    try:
        n = int(obj["n"])
        kind = str(obj.get("kind", "yes"))
        raw_checks = obj["checks"]
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceError(f"instance lacks a valid 'n' or 'checks': {e}") from e
    if n > DENSE_QUBIT_CAP:
        # Reject before touching any matrix: a 13-qubit witness is 8192x8192.
        raise InstanceError(f"dimension cap exceeded: {n} qubits > {DENSE_QUBIT_CAP}")
    if not isinstance(raw_checks, list):
        raise InstanceError("'checks' must be a list")

    checks: list[Povm] = []
    for c, entry in enumerate(raw_checks):
        try:
            support = [int(q) - 1 for q in entry["support"]]
            if any(q < 0 for q in support):
                raise InstanceError(f"check {c}: qubit indices are 1-based")
            if support != sorted(set(support)):
                raise InstanceError(f"check {c}: support must be strictly ascending")
            checks.append(Povm(tuple(support), matrix_from_json(entry["projector"])))
        except InstanceError:
            raise
        except (KeyError, TypeError, BackendError) as e:
            raise InstanceError(f"check {c}: {e}") from e

    witness = None
    if obj.get("witness") is not None:
        try:
            witness = DenseState.from_json(obj["witness"])
        except BackendError as e:
            raise InstanceError(f"witness: {e}") from e

    inst = Instance(n=n, checks=tuple(checks), kind=kind, witness=witness, name=str(obj.get("name", name)))
    if inst.kind == "yes" and inst.witness is not None:
        worst = min(inst.witness_acceptance())
        if worst < 1.0 - TOL:
            _LOG.warning("instance %s: witness passes its weakest check with probability %.6f", inst.name, worst)
    return inst


def load_instance(path: Path) -> Instance:
    p = Path(path)
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise InstanceError(f"instance file not found: {p}") from e
    except json.JSONDecodeError as e:
        raise InstanceError(f"instance file is not valid JSON: {e}") from e
    return instance_from_json(obj, name=p.stem)


# ---------------------------------------------------------------------------
# Bundled instances
# ---------------------------------------------------------------------------

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _kron(*ops: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=np.complex128)
    for op in ops:
        out = np.kron(out, op)
    return out


def _stabilizer_projector(*paulis: np.ndarray) -> np.ndarray:
    p = _kron(*paulis)
    return (np.eye(p.shape[0], dtype=np.complex128) + p) / 2


def ghz_instance() -> Instance:
    """GHZ_3 stabilizer checks Z1Z2, Z2Z3, X1X2X3 with the GHZ state as witness."""
    ghz = np.zeros(8, dtype=np.complex128)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    return Instance(
        n=3,
        checks=(
            Povm((0, 1), _stabilizer_projector(_Z, _Z)),
            Povm((1, 2), _stabilizer_projector(_Z, _Z)),
            Povm((0, 1, 2), _stabilizer_projector(_X, _X, _X)),
        ),
        kind="yes",
        witness=DenseState.pure(ghz),
        name="ghz",
    )


def frustrated_instance() -> Instance:
    """(I+Z)/2 and (I+X)/2 on qubit 1 of 3; no state passes both."""
    return Instance(
        n=3,
        checks=(
            Povm((0,), (_I2 + _Z) / 2),
            Povm((0,), (_I2 + _X) / 2),
        ),
        kind="no",
        witness=None,
        name="frustrated",
    )


def bundled_instances() -> dict[str, Instance]:
    return {"ghz": ghz_instance(), "frustrated": frustrated_instance()}


# ---------------------------------------------------------------------------
# Local simulation and soundness
# ---------------------------------------------------------------------------


def local_sim(instance: Instance, support: tuple[int, ...] | list[int]) -> DenseState:
    """Reduced witness on ``support``; computed from the instance's witness description."""
    return partial_trace(instance.require_witness(), list(support))


def averaged_check_operator(instance: Instance) -> np.ndarray:
    """(1/m) sum_c Pi_c embedded on S_c, as a dense matrix."""
    acc = np.zeros((1 << instance.n,) * 2, dtype=np.complex128)
    for povm in instance.checks:
        acc += embed_operator(povm.projector, povm.support, instance.n)
    return acc / instance.m


def _top_eigenpair(instance: Instance) -> tuple[float, np.ndarray]:
    if instance.n <= _DENSE_EIG_MAX_QUBITS:
        evals, evecs = np.linalg.eigh(averaged_check_operator(instance))
        return float(evals[-1]), evecs[:, -1]
    acc = None
    for povm in instance.checks:
        term = embed_operator_sparse(povm.projector, povm.support, instance.n)
        acc = term if acc is None else acc + term
    assert acc is not None
    vals, vecs = eigsh(acc / instance.m, k=1, which="LA")
    return float(vals[0]), vecs[:, 0]


def soundness_bound(instance: Instance) -> float:
    """Largest eigenvalue of the averaged check operator: the best acceptance any state achieves."""
    value, _ = _top_eigenpair(instance)
    return min(1.0, max(0.0, value))


def optimal_cheating_state(instance: Instance) -> DenseState:
    _, vec = _top_eigenpair(instance)
    return DenseState.pure(vec)

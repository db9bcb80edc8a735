"""Exact simulation primitives.

Two state models live here:

* ``BB84Register`` keeps product BB84 states symbolically as (basis, value)
  cells, so its width is unbounded and measurement is a table update.
* ``DenseState`` keeps a density matrix on at most ``DENSE_QUBIT_CAP`` qubits.
  Qubit 0 is the leftmost Kronecker factor, i.e. the most significant bit of a
  basis index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
import numpy.typing as npt
from scipy import sparse

from .constants import DENSE_QUBIT_CAP, TOL
from .util import Bits, as_bits, bits_to_hex

_LOG = logging.getLogger(__name__)

Matrix = npt.NDArray[np.complex128]


class BackendError(ValueError):
    """Shape, length, tolerance or dimension-cap violation in the simulation backend."""


# ---------------------------------------------------------------------------
# BB84 product states
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class BB84Register:
    """Product of BB84 qubits; cell i encodes ``value[i]`` in basis ``basis[i]`` (1 = Hadamard).

    ``collapsed[i]`` is set once cell i has been measured; the cell then holds
    the measured (basis, outcome) pair.
    """

    basis: Bits
    value: Bits
    collapsed: npt.NDArray[np.bool_] = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        if self.basis.shape != self.value.shape or self.basis.ndim != 1:
            raise BackendError("BB84 bases and values must be equal-length bit strings")
        if self.basis.size < 1:
            raise BackendError("BB84 register needs at least one qubit")
        if self.collapsed.size == 0:
            self.collapsed = np.zeros(self.basis.size, dtype=bool)
        elif self.collapsed.shape != self.basis.shape:
            raise BackendError("collapse record has the wrong width")

    @property
    def width(self) -> int:
        return int(self.basis.size)

    def copy(self) -> "BB84Register":
        return BB84Register(self.basis.copy(), self.value.copy(), self.collapsed.copy())

    def to_json(self) -> dict[str, Any]:
        return {
            "theta": bits_to_hex(self.basis),
            "r": bits_to_hex(self.value),
            "collapsed": [int(i) for i in np.flatnonzero(self.collapsed)],
        }


def new_bb84(bases: Iterable[int] | str | Bits, values: Iterable[int] | str | Bits) -> BB84Register:
    b = as_bits(bases)
    v = as_bits(values)
    if b.size != v.size:
        raise BackendError(f"bases/values length mismatch ({b.size} vs {v.size})")
    if b.size == 0:
        raise BackendError("BB84 register needs at least one qubit")
    return BB84Register(b, v)


def measure_positions(
    reg: BB84Register,
    positions: Sequence[int] | npt.NDArray[np.intp],
    meas_bases: Iterable[int] | str | Bits,
    rng: np.random.Generator,
) -> Bits:
    """Destructively measure the listed cells, each in its own basis.

    A cell measured in the basis it was prepared (or last collapsed) in returns
    its value; otherwise the outcome is a fresh uniform bit. Either way the cell
    collapses to (measured basis, outcome).
    """
    pos = np.asarray(positions, dtype=np.intp)
    mb = as_bits(meas_bases)
    if pos.shape != mb.shape:
        raise BackendError(f"{pos.size} positions but {mb.size} measurement bases")
    if pos.size and (pos.min() < 0 or pos.max() >= reg.width):
        raise BackendError("measurement position out of range")
    if np.unique(pos).size != pos.size:
        raise BackendError("measurement positions must be distinct")

    fresh = rng.integers(0, 2, size=pos.size, dtype=np.uint8)
    same = reg.basis[pos] == mb
    outcome = np.where(same, reg.value[pos], fresh).astype(np.uint8)

    reg.basis[pos] = mb
    reg.value[pos] = outcome
    reg.collapsed[pos] = True
    return outcome


def measure_all(reg: BB84Register, meas_bases: Iterable[int] | str | Bits, rng: np.random.Generator) -> Bits:
    mb = as_bits(meas_bases)
    if mb.size != reg.width:
        raise BackendError(f"register has {reg.width} cells, got {mb.size} measurement bases")
    return measure_positions(reg, np.arange(reg.width), mb, rng)


# ---------------------------------------------------------------------------
# Dense states
# ---------------------------------------------------------------------------


def _check_qubits(n: int) -> None:
    if n < 1:
        raise BackendError("a dense state needs at least one qubit")
    if n > DENSE_QUBIT_CAP:
        raise BackendError(f"dense simulation is capped at {DENSE_QUBIT_CAP} qubits, got {n}")


@dataclass(frozen=True, eq=False)
class DenseState:
    num_qubits: int
    rho: Matrix

    def __post_init__(self) -> None:
        _check_qubits(int(self.num_qubits))
        dim = 1 << int(self.num_qubits)
        rho = np.array(self.rho, dtype=np.complex128)
        if rho.shape != (dim, dim):
            raise BackendError(f"rho must be {dim}x{dim} for {self.num_qubits} qubits, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=TOL, rtol=0.0):
            raise BackendError("rho is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TOL:
            raise BackendError(f"rho has trace {tr.real:.12g}, expected 1")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def validate(self) -> "DenseState":
        """Eigenvalue check (O(d^3)); constructors only check Hermiticity and trace."""
        evals = np.linalg.eigvalsh(self.rho)
        if evals.min() < -TOL:
            raise BackendError(f"rho has a negative eigenvalue {evals.min():.3g}")
        return self

    @classmethod
    def pure(cls, vector: npt.ArrayLike) -> "DenseState":
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        n = int(v.size).bit_length() - 1
        if v.size < 2 or (1 << n) != v.size:
            raise BackendError("state vector length must be a power of two")
        norm = np.linalg.norm(v)
        if norm < TOL:
            raise BackendError("zero state vector")
        v = v / norm
        return cls(n, np.outer(v, v.conj()))

    @classmethod
    def basis_state(cls, bits: Iterable[int] | str | Bits) -> "DenseState":
        b = as_bits(bits)
        n = int(b.size)
        _check_qubits(n)
        idx = int("".join(str(int(x)) for x in b.tolist()), 2)
        rho = np.zeros((1 << n, 1 << n), dtype=np.complex128)
        rho[idx, idx] = 1.0
        return cls(n, rho)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DenseState":
        _check_qubits(n)
        return cls(n, np.eye(1 << n, dtype=np.complex128) / (1 << n))

    def to_json(self) -> dict[str, Any]:
        return {"n": self.num_qubits, "rho": matrix_to_json(self.rho)}

    @classmethod
    def from_json(cls, obj: Any) -> "DenseState":
        """Accept either {"n": int, "rho": matrix-json} or a bare matrix-json."""
        if isinstance(obj, dict):
            if "rho" not in obj:
                raise BackendError("state object lacks 'rho'")
            rho = matrix_from_json(obj["rho"])
            n = int(obj.get("n", int(rho.shape[0]).bit_length() - 1))
        else:
            rho = matrix_from_json(obj)
            n = int(rho.shape[0]).bit_length() - 1
        return cls(n, rho).validate()


def matrix_to_json(m: npt.ArrayLike) -> list[list[list[float]]]:
    arr = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_from_json(obj: Any) -> Matrix:
    """Parse row-major [[ [re, im], ... ], ...]; plain real entries are accepted too."""
    try:
        rows = []
        for row in obj:
            out_row = []
            for z in row:
                if isinstance(z, (list, tuple)):
                    if len(z) != 2:
                        raise BackendError("complex entries must be [re, im] pairs")
                    out_row.append(complex(float(z[0]), float(z[1])))
                else:
                    out_row.append(complex(float(z), 0.0))
            rows.append(out_row)
        arr = np.array(rows, dtype=np.complex128)
    except BackendError:
        raise
    except (TypeError, ValueError) as e:
        raise BackendError(f"malformed matrix: {e}") from e
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise BackendError(f"matrix must be square with dimension >= 2, got shape {arr.shape}")
    if arr.shape[0] & (arr.shape[0] - 1):
        raise BackendError("matrix dimension must be a power of two")
    return arr


def random_state(n: int, rng: np.random.Generator, rank: int | None = None) -> DenseState:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    _check_qubits(n)
    dim = 1 << n
    k = dim if rank is None else int(rank)
    if not 1 <= k <= dim:
        raise BackendError(f"rank must be in [1, {dim}]")
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DenseState(n, rho / np.trace(rho).real)


# ---------------------------------------------------------------------------
# Pauli masks and POVMs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PauliMask:
    """X^x Z^z acting qubit-wise."""

    x: Bits
    z: Bits

    def __post_init__(self) -> None:
        x = as_bits(self.x)
        z = as_bits(self.z)
        if x.size != z.size:
            raise BackendError(f"mask x/z lengths differ ({x.size} vs {z.size})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def num_qubits(self) -> int:
        return int(self.x.size)

    @classmethod
    def identity(cls, n: int) -> "PauliMask":
        return cls(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    def restricted(self, support: Sequence[int]) -> "PauliMask":
        """Same mask with every bit outside ``support`` cleared."""
        keep = np.zeros(self.num_qubits, dtype=np.uint8)
        keep[list(support)] = 1
        return PauliMask(self.x & keep, self.z & keep)


@dataclass(frozen=True, eq=False)
class Povm:
    """Two-outcome projective measurement {Pi, I - Pi} on an ordered qubit subset."""

    support: tuple[int, ...]
    projector: Matrix

    def __post_init__(self) -> None:
        sup = tuple(int(q) for q in self.support)
        if not sup:
            raise BackendError("POVM support must be non-empty")
        if len(set(sup)) != len(sup):
            raise BackendError("POVM support has repeated qubits")
        if min(sup) < 0:
            raise BackendError("POVM support indices must be non-negative")
        pi = np.array(self.projector, dtype=np.complex128)
        dim = 1 << len(sup)
        if pi.shape != (dim, dim):
            raise BackendError(f"projector must be {dim}x{dim} for a {len(sup)}-qubit support")
        if not np.allclose(pi, pi.conj().T, atol=TOL, rtol=0.0):
            raise BackendError("projector is not Hermitian")
        if not np.allclose(pi @ pi, pi, atol=TOL, rtol=0.0):
            raise BackendError("projector is not idempotent")
        pi.flags.writeable = False
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "projector", pi)

    def complement(self) -> "Povm":
        return Povm(self.support, np.eye(self.projector.shape[0], dtype=np.complex128) - self.projector)


# ---------------------------------------------------------------------------
# Tensor plumbing
# ---------------------------------------------------------------------------


def _check_support(support: Sequence[int], n: int) -> list[int]:
    sup = [int(q) for q in support]
    if not sup:
        raise BackendError("qubit subset must be non-empty")
    if len(set(sup)) != len(sup):
        raise BackendError("qubit subset has repeated indices")
    if min(sup) < 0 or max(sup) >= n:
        raise BackendError(f"qubit subset {sup} out of range for {n} qubits")
    return sup


def _front_axes(support: list[int], n: int) -> list[int]:
    order = support + [q for q in range(n) if q not in support]
    return order + [n + q for q in order]


def _split(rho: Matrix, support: list[int], n: int) -> npt.NDArray[np.complex128]:
    """View rho as (d_S, d_rest, d_S, d_rest) with ``support`` moved to the front in the given order."""
    k = len(support)
    t = rho.reshape([2] * (2 * n)).transpose(_front_axes(support, n))
    return t.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))


def _merge(t: npt.NDArray[np.complex128], support: list[int], n: int) -> Matrix:
    axes = _front_axes(support, n)
    out = t.reshape([2] * (2 * n)).transpose(np.argsort(axes))
    return out.reshape(1 << n, 1 << n)


def _sandwich(rho: Matrix, op: Matrix, support: list[int], n: int) -> Matrix:
    """(op (x) I) rho (op (x) I)^dagger with ``op`` acting on ``support``."""
    t = _split(rho, support, n)
    out = np.einsum("ab,bjcl,dc->ajdl", op, t, op.conj(), optimize=True)
    return _merge(out, support, n)


def _permutation_index(support: list[int], n: int) -> npt.NDArray[np.intp]:
    """perm[k] = index of basis state k after moving ``support`` to the front."""
    order = support + [q for q in range(n) if q not in support]
    k = np.arange(1 << n, dtype=np.intp)
    perm = np.zeros_like(k)
    for j, q in enumerate(order):
        perm |= ((k >> (n - 1 - q)) & 1) << (n - 1 - j)
    return perm


def embed_operator(op: npt.ArrayLike, support: Sequence[int], n: int) -> Matrix:
    """Dense ``op (x) I`` with ``op`` placed on ``support``."""
    _check_qubits(n)
    sup = _check_support(support, n)
    o = np.asarray(op, dtype=np.complex128)
    full = np.kron(o, np.eye(1 << (n - len(sup)), dtype=np.complex128))
    perm = _permutation_index(sup, n)
    return full[np.ix_(perm, perm)]


def embed_operator_sparse(op: npt.ArrayLike, support: Sequence[int], n: int) -> sparse.csr_matrix:
    _check_qubits(n)
    sup = _check_support(support, n)
    o = sparse.csr_matrix(np.asarray(op, dtype=np.complex128))
    full = sparse.kron(o, sparse.identity(1 << (n - len(sup)), dtype=np.complex128, format="csr"), format="csr")
    perm = _permutation_index(sup, n)
    return full[perm][:, perm].tocsr()


def embed_state(local: DenseState, support: Sequence[int], n: int) -> DenseState:
    """Place ``local`` on ``support`` and |0><0| on every other qubit."""
    _check_qubits(n)
    sup = _check_support(support, n)
    if local.num_qubits != len(sup):
        raise BackendError(f"local state has {local.num_qubits} qubits, support has {len(sup)}")
    pad = np.zeros((1 << (n - len(sup)),) * 2, dtype=np.complex128)
    pad[0, 0] = 1.0
    full = np.kron(local.rho, pad)
    perm = _permutation_index(sup, n)
    return DenseState(n, full[np.ix_(perm, perm)])


def _hermitize(rho: Matrix) -> Matrix:
    return (rho + rho.conj().T) / 2


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def apply_pauli_mask(state: DenseState, mask: PauliMask) -> DenseState:
    """Return X^x Z^z rho Z^z X^x."""
    n = state.num_qubits
    if mask.num_qubits != n:
        raise BackendError(f"mask has {mask.num_qubits} qubits, state has {n}")
    shifts = np.arange(n - 1, -1, -1)
    x_int = int((mask.x.astype(np.int64) << shifts).sum())
    z_int = int((mask.z.astype(np.int64) << shifts).sum())
    if x_int == 0 and z_int == 0:
        return state

    idx = np.arange(1 << n, dtype=np.int64)
    # Z^z|k> = (-1)^{popcount(k & z)} |k>
    parity = ((idx[:, None] >> shifts[None, :]) & 1)[:, mask.z.astype(bool)].sum(axis=1) & 1
    phase = 1.0 - 2.0 * parity
    rho = state.rho * phase[:, None] * phase[None, :]
    # X^x|k> = |k xor x>
    perm = idx ^ x_int
    return DenseState(n, rho[np.ix_(perm, perm)])


def povm_prob(state: DenseState, povm: Povm) -> float:
    """Tr[(Pi (x) I) rho]."""
    reduced = partial_trace(state, povm.support)
    p = float(np.real(np.trace(povm.projector @ reduced.rho)))
    return min(1.0, max(0.0, p))


def povm_measure(state: DenseState, povm: Povm, rng: np.random.Generator) -> tuple[bool, DenseState]:
    n = state.num_qubits
    sup = _check_support(povm.support, n)
    p = povm_prob(state, povm)
    accepted = bool(rng.random() < p)
    if accepted:
        op, weight = povm.projector, p
    else:
        op, weight = np.eye(povm.projector.shape[0], dtype=np.complex128) - povm.projector, 1.0 - p
    post = _sandwich(np.asarray(state.rho), op, sup, n) / weight
    return accepted, DenseState(n, _hermitize(post))


def partial_trace(state: DenseState, keep: Sequence[int]) -> DenseState:
    """Reduced state on ``keep``, with qubits ordered as listed."""
    n = state.num_qubits
    sup = _check_support(keep, n)
    if sup == list(range(n)):
        return state
    t = _split(np.asarray(state.rho), sup, n)
    reduced = np.einsum("ajbj->ab", t)
    return DenseState(len(sup), _hermitize(reduced))


def trace_distance(a: DenseState, b: DenseState) -> float:
    if a.num_qubits != b.num_qubits:
        raise BackendError(f"trace distance between {a.num_qubits}- and {b.num_qubits}-qubit states")
    evals = np.linalg.eigvalsh(_hermitize(a.rho - b.rho))
    return float(0.5 * np.abs(evals).sum())

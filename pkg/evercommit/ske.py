"""One-time secret-key encryption with certified deletion.

A ciphertext is a BB84 register over mu qubits plus an n-bit classical part
``m xor u xor T(r|comp)``, where T is a Toeplitz hash keyed by ``hash_seed``
and ``r|comp`` are the random bits sitting on computational-basis positions.
Deleting means measuring every qubit in the Hadamard basis; the verifier
checks the outcomes on the Hadamard positions against r.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import toeplitz

from .backend import BB84Register, measure_all, measure_positions, new_bb84
from .constants import PRESETS
from .util import Bits, as_bits, bits_to_hex, random_bits, xor_bits

_LOG = logging.getLogger(__name__)


class SkeError(ValueError):
    """Invalid parameters, key layout or certificate length."""


@dataclass(frozen=True)
class SkeParams:
    msg_len: int = 8
    mu: int = 32
    mu_comp: int | None = None  # None -> mu // 2
    cert_threshold: int = 0  # tolerated Hadamard-position mismatches in verify

    def __post_init__(self) -> None:
        if self.mu_comp is None:
            object.__setattr__(self, "mu_comp", int(self.mu) // 2)
        if int(self.mu) < 2:
            raise SkeError(f"mu must be at least 2, got {self.mu}")
        if not 1 <= self.comp < int(self.mu):
            raise SkeError(f"need 1 <= mu_comp < mu, got mu_comp={self.mu_comp}, mu={self.mu}")
        if not 1 <= int(self.msg_len) <= self.comp:
            raise SkeError(f"need 1 <= msg_len <= mu_comp, got msg_len={self.msg_len}, mu_comp={self.mu_comp}")
        if int(self.cert_threshold) < 0:
            raise SkeError("cert_threshold must be non-negative")

    @property
    def comp(self) -> int:
        return int(self.mu_comp or 0)

    @property
    def hadamard_count(self) -> int:
        return int(self.mu) - self.comp

    @property
    def seed_len(self) -> int:
        return self.comp + int(self.msg_len) - 1

    @property
    def key_bits(self) -> int:
        """Serialized key length: theta || u || hash_seed."""
        return int(self.mu) + int(self.msg_len) + self.seed_len

    @classmethod
    def from_preset(cls, name: str, **overrides: Any) -> "SkeParams":
        try:
            p = PRESETS[name]
        except KeyError as e:
            raise SkeError(f"unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})") from e
        base: dict[str, Any] = {
            "msg_len": p["msg_len"],
            "mu": p["mu"],
            "mu_comp": p["mu_comp"],
            "cert_threshold": p["threshold"],
        }
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


@dataclass(eq=False)
class SkeSecretKey:
    params: SkeParams
    theta: Bits
    u: Bits
    hash_seed: Bits
    # Verification record; bound once by ske_enc (one-time key).
    r: Bits | None = field(default=None)

    @property
    def comp_positions(self) -> np.ndarray:
        return np.flatnonzero(self.theta == 0)

    @property
    def hadamard_positions(self) -> np.ndarray:
        return np.flatnonzero(self.theta == 1)

    def serialize(self) -> Bits:
        return np.concatenate([self.theta, self.u, self.hash_seed]).astype(np.uint8)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "theta": bits_to_hex(self.theta),
            "u": bits_to_hex(self.u),
            "hash_seed": bits_to_hex(self.hash_seed),
        }
        if self.r is not None:
            out["r"] = bits_to_hex(self.r)
        return out


@dataclass(eq=False)
class SkeCiphertext:
    quantum: BB84Register
    classical: Bits

    def to_json(self, *, debug: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {"classical": bits_to_hex(self.classical), "width": self.quantum.width}
        if debug:
            out["bb84"] = self.quantum.to_json()
        return out


@dataclass(frozen=True, eq=False)
class SkeDeletionCert:
    outcomes: Bits

    def to_json(self) -> str:
        return bits_to_hex(self.outcomes)


def serialize_key(sk: SkeSecretKey) -> Bits:
    return sk.serialize()


def deserialize_key(bits: Bits, params: SkeParams) -> SkeSecretKey:
    b = as_bits(bits)
    if b.size != params.key_bits:
        raise SkeError(f"serialized key must have {params.key_bits} bits, got {b.size}")
    mu, n = int(params.mu), int(params.msg_len)
    theta = b[:mu]
    if int(theta.sum()) != params.hadamard_count:
        raise SkeError(f"theta has weight {int(theta.sum())}, expected {params.hadamard_count}")
    return SkeSecretKey(params, theta.copy(), b[mu:mu + n].copy(), b[mu + n:].copy())


def toeplitz_hash(seed: Bits, x: Bits, out_len: int) -> Bits:
    """GF(2) Toeplitz hash of ``x`` into ``out_len`` bits; |seed| = |x| + out_len - 1.

    Row i of the matrix is seed[out_len - 1 - i : out_len - 1 - i + |x|].
    """
    n_in = int(x.size)
    if seed.size != n_in + out_len - 1:
        raise SkeError(f"Toeplitz seed needs {n_in + out_len - 1} bits, got {seed.size}")
    col = seed[out_len - 1::-1][:out_len]
    row = seed[out_len - 1:out_len - 1 + n_in]
    mat = toeplitz(col.astype(np.uint16), row.astype(np.uint16))
    return ((mat @ x.astype(np.uint16)) % 2).astype(np.uint8)


def recover_plaintext(sk: SkeSecretKey, classical: Bits, r_comp: Bits) -> Bits:
    """classical xor u xor T(r|comp)."""
    pad = toeplitz_hash(sk.hash_seed, as_bits(r_comp), int(sk.params.msg_len))
    return xor_bits(xor_bits(as_bits(classical), sk.u), pad)


def ske_keygen(params: SkeParams, rng: np.random.Generator) -> SkeSecretKey:
    theta = np.zeros(int(params.mu), dtype=np.uint8)
    theta[rng.permutation(int(params.mu))[: params.hadamard_count]] = 1
    return SkeSecretKey(
        params=params,
        theta=theta,
        u=random_bits(rng, int(params.msg_len)),
        hash_seed=random_bits(rng, params.seed_len),
    )


def ske_enc(sk: SkeSecretKey, m: Bits, rng: np.random.Generator) -> SkeCiphertext:
    msg = as_bits(m)
    if msg.size != int(sk.params.msg_len):
        raise SkeError(f"message has {msg.size} bits, key expects {sk.params.msg_len}")
    if sk.r is not None:
        raise SkeError("one-time key already used for an encryption")
    r = random_bits(rng, int(sk.params.mu))
    sk.r = r.copy()
    classical = xor_bits(xor_bits(msg, sk.u), toeplitz_hash(sk.hash_seed, r[sk.comp_positions], int(sk.params.msg_len)))
    return SkeCiphertext(quantum=new_bb84(sk.theta, r), classical=classical)


def ske_dec(sk: SkeSecretKey, ct: SkeCiphertext, rng: np.random.Generator) -> Bits:
    comp = sk.comp_positions
    if comp.size != sk.params.comp:
        raise SkeError(f"key marks {comp.size} computational positions, expected {sk.params.comp}")
    if ct.quantum.width != int(sk.params.mu):
        raise SkeError(f"ciphertext has {ct.quantum.width} qubits, key expects {sk.params.mu}")
    r_comp = measure_positions(ct.quantum, comp, np.zeros(comp.size, dtype=np.uint8), rng)
    return recover_plaintext(sk, ct.classical, r_comp)


def ske_del(ct: SkeCiphertext, rng: np.random.Generator) -> SkeDeletionCert:
    outcomes = measure_all(ct.quantum, np.ones(ct.quantum.width, dtype=np.uint8), rng)
    return SkeDeletionCert(outcomes)


def ske_verify(sk: SkeSecretKey, cert: SkeDeletionCert) -> bool:
    if cert.outcomes.size != int(sk.params.mu):
        raise SkeError(f"certificate has {cert.outcomes.size} bits, expected {sk.params.mu}")
    if sk.r is None:
        raise SkeError("key has no verification record (never used to encrypt)")
    had = sk.hadamard_positions
    mismatches = int(np.count_nonzero(cert.outcomes[had] != sk.r[had]))
    if mismatches:
        _LOG.debug("deletion certificate: %d mismatches on Hadamard positions", mismatches)
    return mismatches <= int(sk.params.cert_threshold)

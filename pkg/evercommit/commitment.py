"""Commitment with certified everlasting hiding.

com = (SKE ciphertext of m, f = commit(R; R'), h = H(R) xor sk). Opening
reveals d = (R, R'); the receiver checks f, unmasks sk from h and decrypts.
Alternatively the receiver deletes the ciphertext and hands back a certificate
that the committer checks with ck = sk.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .backend import measure_all
from .constants import PRESETS
from .oracles import (
    OracleSet,
    commit_classical,
    commitment_length,
    extract_classical,
    ro_query,
    verify_opening,
)
from .ske import (
    SkeCiphertext,
    SkeDeletionCert,
    SkeError,
    SkeParams,
    SkeSecretKey,
    deserialize_key,
    ske_dec,
    ske_del,
    ske_enc,
    ske_keygen,
    ske_verify,
)
from .util import Bits, as_bits, bits_to_hex, random_bits, xor_bits

_LOG = logging.getLogger(__name__)


class CommitmentError(ValueError):
    """Invalid commitment parameters or malformed openings."""


@dataclass(frozen=True)
class CommitParams:
    ske: SkeParams
    s: int = 16
    t: int = 16

    def __post_init__(self) -> None:
        if int(self.s) < 1 or int(self.t) < 1:
            raise CommitmentError(f"s and t must be positive, got s={self.s}, t={self.t}")

    @property
    def q(self) -> int:
        return commitment_length(self.s, self.t)

    @property
    def mask_len(self) -> int:
        return self.ske.key_bits

    @property
    def msg_len(self) -> int:
        return int(self.ske.msg_len)

    @classmethod
    def from_preset(
        cls,
        name: str,
        *,
        msg_len: int | None = None,
        mu: int | None = None,
        mu_comp: int | None = None,
        s: int | None = None,
        t: int | None = None,
        threshold: int | None = None,
    ) -> "CommitParams":
        if name not in PRESETS:
            raise CommitmentError(f"unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})")
        p = PRESETS[name]
        try:
            ske = SkeParams.from_preset(name, msg_len=msg_len, mu=mu, mu_comp=mu_comp, cert_threshold=threshold)
        except SkeError as e:
            raise CommitmentError(str(e)) from e
        return cls(ske=ske, s=int(s if s is not None else p["s"]), t=int(t if t is not None else p["t"]))

    def for_bits(self) -> "CommitParams":
        """Same parameters over the message space {0,1}."""
        return replace(self, ske=replace(self.ske, msg_len=1))

    def with_msg_len(self, n: int) -> "CommitParams":
        return replace(self, ske=replace(self.ske, msg_len=int(n)))

    def new_oracles(self, rng: np.random.Generator) -> OracleSet:
        return OracleSet.fresh(self.s, self.t, self.mask_len, rng)

    def to_json(self) -> dict[str, Any]:
        return {
            "msg_len": self.msg_len,
            "mu": int(self.ske.mu),
            "mu_comp": self.ske.comp,
            "threshold": int(self.ske.cert_threshold),
            "s": int(self.s),
            "t": int(self.t),
            "q": self.q,
            "key_bits": self.mask_len,
        }


@dataclass(eq=False)
class CcdCommitment:
    ske_ct: SkeCiphertext
    f: Bits
    h: Bits

    def copy(self) -> "CcdCommitment":
        """Independent copy of the quantum part (auditing only; a receiver cannot clone)."""
        ct = SkeCiphertext(self.ske_ct.quantum.copy(), self.ske_ct.classical.copy())
        return CcdCommitment(ct, self.f.copy(), self.h.copy())

    def to_json(self, *, debug: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "ske_classical": bits_to_hex(self.ske_ct.classical),
            "f": bits_to_hex(self.f),
            "h": bits_to_hex(self.h),
        }
        if debug:
            out["bb84"] = self.ske_ct.quantum.to_json()
        return out


@dataclass(frozen=True, eq=False)
class CcdDecommitment:
    d1: Bits
    d2: Bits

    def to_json(self) -> dict[str, str]:
        return {"d1": bits_to_hex(self.d1), "d2": bits_to_hex(self.d2)}


@dataclass(eq=False)
class CcdKey:
    ck: SkeSecretKey

    def to_json(self) -> dict[str, Any]:
        return self.ck.to_json()


def ccd_commit(
    m: Bits, rng: np.random.Generator, oracles: OracleSet, params: CommitParams
) -> tuple[CcdCommitment, CcdDecommitment, CcdKey]:
    msg = as_bits(m)
    if msg.size != params.msg_len:
        raise CommitmentError(f"message has {msg.size} bits, parameters expect {params.msg_len}")
    if oracles.mask.out_len != params.mask_len:
        raise CommitmentError(f"mask oracle outputs {oracles.mask.out_len} bits, key needs {params.mask_len}")
    sk = ske_keygen(params.ske, rng)
    r = random_bits(rng, params.s)
    r_prime = random_bits(rng, params.t)
    ct = ske_enc(sk, msg, rng)
    f = commit_classical(r, r_prime, oracles.commit)
    h = xor_bits(ro_query(oracles.mask, r), sk.serialize())
    return CcdCommitment(ct, f, h), CcdDecommitment(r, r_prime), CcdKey(sk)


def ccd_verify1(com: CcdCommitment, d: CcdDecommitment, oracles: OracleSet) -> bool:
    return verify_opening(com.f, d.d1, d.d2, oracles.commit)


def ccd_verify2(
    com: CcdCommitment, d1: Bits, oracles: OracleSet, params: CommitParams, rng: np.random.Generator
) -> Bits:
    """Decrypt with sk' = H(d1) xor h. Consumes the quantum part.

    An sk' whose theta has the wrong weight decrypts to a uniform message.
    """
    sk_bits = xor_bits(ro_query(oracles.mask, as_bits(d1)), com.h)
    try:
        sk = deserialize_key(sk_bits, params.ske)
    except SkeError as e:
        _LOG.debug("verify2: unmasked key rejected (%s); returning a uniform message", e)
        measure_all(com.ske_ct.quantum, np.zeros(com.ske_ct.quantum.width, dtype=np.uint8), rng)
        return random_bits(rng, params.msg_len)
    return ske_dec(sk, com.ske_ct, rng)


def ccd_verify(
    com: CcdCommitment, d: CcdDecommitment, oracles: OracleSet, params: CommitParams, rng: np.random.Generator
) -> Bits | None:
    """Committed message, or None when the opening of f fails."""
    if not ccd_verify1(com, d, oracles):
        return None
    return ccd_verify2(com, d.d1, oracles, params, rng)


def ccd_del(com: CcdCommitment, rng: np.random.Generator) -> SkeDeletionCert:
    return ske_del(com.ske_ct, rng)


def ccd_cert(cert: SkeDeletionCert, key: CcdKey) -> bool:
    return ske_verify(key.ck, cert)


def ccd_extract(f: Bits, oracles: OracleSet, params: CommitParams) -> Bits | None:
    return extract_classical(f, oracles.commit, params.s, params.t)


def ccd_verify_sum(
    com: CcdCommitment,
    d: CcdDecommitment,
    b: int,
    oracles: OracleSet,
    params: CommitParams,
    rng: np.random.Generator,
) -> bool:
    """Sum-binding verification over {0,1}: the opening checks and the decrypted bit equals ``b``."""
    if params.msg_len != 1:
        raise CommitmentError("sum-binding verification is defined for single-bit commitments")
    if int(b) not in (0, 1):
        raise CommitmentError(f"b must be 0 or 1, got {b!r}")
    if not ccd_verify1(com, d, oracles):
        return False
    out = ccd_verify2(com, d.d1, oracles, params, rng)
    return int(out[0]) == int(b)

"""Lazily sampled random oracles and the classical commitment built on them.

A ``RandomOracle`` draws each answer the first time an input is queried and
keeps it. Reprogramming installs patches that shadow the base table, which is
how the hybrid games hand one party a modified oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .constants import COMMIT_TAG_BITS, EXTRACT_MAX_BITS
from .util import Bits, as_bits, bits_key, bits_to_hex, random_bits

_LOG = logging.getLogger(__name__)


class OracleError(ValueError):
    """Length or parameter violation when using an oracle."""


class SearchSpaceTooLarge(OracleError):
    """Brute-force extraction refused because 2^(s+t) exceeds the configured cap."""


class CommitmentCollision(RuntimeError):
    """Two distinct messages open the same classical commitment."""

    def __init__(self, message: str, *, openings: list[tuple[Bits, Bits]] | None = None) -> None:
        super().__init__(message)
        self.openings = list(openings or [])


@dataclass(eq=False)
class RandomOracle:
    out_len: int
    rng: np.random.Generator
    name: str = "H"
    table: dict[bytes, Bits] = field(default_factory=dict)
    query_log: list[Bits] = field(default_factory=list)
    patches: dict[bytes, Bits] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.out_len < 1:
            raise OracleError("oracle output length must be positive")

    def fork(self, name: str | None = None) -> "RandomOracle":
        """View of the same function with its own patches and query log.

        The base table and generator are shared, so unpatched points agree with
        this oracle no matter which view samples them first.
        """
        return RandomOracle(
            out_len=self.out_len,
            rng=self.rng,
            name=name or self.name,
            table=self.table,
            query_log=[],
            patches=dict(self.patches),
        )

    def queried(self, point: Bits) -> bool:
        key = bits_key(as_bits(point))
        return any(bits_key(q) == key for q in self.query_log)

    def query_log_hex(self) -> list[str]:
        return [bits_to_hex(q) for q in self.query_log]

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "out_len": self.out_len,
            "queries": self.query_log_hex(),
            "patched_points": len(self.patches),
        }


def ro_query(oracle: RandomOracle, inp: Bits) -> Bits:
    x = as_bits(inp)
    key = bits_key(x)
    oracle.query_log.append(x)
    patched = oracle.patches.get(key)
    if patched is not None:
        return patched.copy()
    hit = oracle.table.get(key)
    if hit is None:
        hit = random_bits(oracle.rng, oracle.out_len)
        oracle.table[key] = hit
    return hit.copy()


def ro_reprogram(oracle: RandomOracle, point: Bits, value: Bits) -> None:
    v = as_bits(value)
    if v.size != oracle.out_len:
        raise OracleError(f"reprogrammed value has {v.size} bits, oracle outputs {oracle.out_len}")
    oracle.patches[bits_key(as_bits(point))] = v


def _answer(oracle: RandomOracle, key: bytes) -> Bits | None:
    """Current answer at ``key`` without querying (None when never sampled)."""
    hit = oracle.patches.get(key)
    return hit if hit is not None else oracle.table.get(key)


# ---------------------------------------------------------------------------
# Classical commitment f = O(R || R')
# ---------------------------------------------------------------------------


def commitment_length(s: int, t: int) -> int:
    return int(s) + int(t) + COMMIT_TAG_BITS


def commit_classical(r: Bits, r_prime: Bits, oracle: RandomOracle) -> Bits:
    rb = as_bits(r)
    rpb = as_bits(r_prime)
    if rb.size < 1 or rpb.size < 1:
        raise OracleError("commitment message and randomness must be non-empty")
    q = commitment_length(rb.size, rpb.size)
    if oracle.out_len != q:
        raise OracleError(f"commitment oracle outputs {oracle.out_len} bits, expected q = s + t + {COMMIT_TAG_BITS} = {q}")
    return ro_query(oracle, np.concatenate([rb, rpb]))


def verify_opening(f: Bits, r: Bits, r_prime: Bits, oracle: RandomOracle) -> bool:
    fb = as_bits(f)
    try:
        out = commit_classical(r, r_prime, oracle)
    except OracleError:
        return False
    return bool(out.shape == fb.shape and np.array_equal(out, fb))


# How find_openings covers the opening space; echoed in audit reports.
OPENING_SEARCH = "sampled points compared, unsampled remainder sampled by a lazy binomial draw"


def _check_space(s: int, t: int) -> int:
    bits = int(s) + int(t)
    if bits > EXTRACT_MAX_BITS:
        raise SearchSpaceTooLarge(
            f"search space too large: s + t = {bits} exceeds {EXTRACT_MAX_BITS} (2^{bits} openings)"
        )
    return bits


def find_openings(f: Bits, oracle: RandomOracle, s: int, t: int) -> list[tuple[Bits, Bits]]:
    """Every (R, R') in {0,1}^s x {0,1}^t whose oracle answer equals ``f``.

    Not a literal enumeration. Points already sampled are compared directly;
    the unsampled remainder is sampled by a lazy binomial draw. The number of
    its points that land on ``f`` is Binomial(N, 2^-q), and only those points
    are written into the table. The result has the distribution of sampling
    every point while the table stays at the size of the query history.
    """
    fb = as_bits(f)
    bits = _check_space(s, t)
    if fb.size != oracle.out_len:
        return []

    found: list[tuple[Bits, Bits]] = []
    known = set(oracle.table) | set(oracle.patches)
    known_in_domain = 0
    for key in known:
        if len(key) != bits:
            continue
        known_in_domain += 1
        ans = _answer(oracle, key)
        if ans is not None and np.array_equal(ans, fb):
            x = np.frombuffer(key, dtype=np.uint8).copy()
            found.append((x[:s], x[s:]))

    unsampled = (1 << bits) - known_in_domain
    hits = int(oracle.rng.binomial(unsampled, 2.0 ** -oracle.out_len)) if unsampled > 0 else 0
    while hits > 0:
        x = random_bits(oracle.rng, bits)
        key = bits_key(x)
        if key in oracle.table or key in oracle.patches:
            continue
        oracle.table[key] = fb.copy()
        found.append((x[:s], x[s:]))
        hits -= 1

    found.sort(key=lambda rr: (bits_key(rr[0]), bits_key(rr[1])))
    return found


def extract_classical(f: Bits, oracle: RandomOracle, s: int, t: int) -> Bits | None:
    """Unique message R opened by ``f``; None when nothing opens it."""
    openings = find_openings(f, oracle, s, t)
    if not openings:
        return None
    messages = {bits_key(r) for r, _ in openings}
    if len(messages) > 1:
        _LOG.error("classical commitment collision: %d distinct messages open f", len(messages))
        raise CommitmentCollision(
            f"collision: {len(messages)} distinct messages open the same commitment", openings=openings
        )
    return openings[0][0].copy()


@dataclass(eq=False)
class OracleSet:
    """The two oracles one trial uses: the commitment oracle and the key mask H."""

    commit: RandomOracle
    mask: RandomOracle

    @classmethod
    def fresh(cls, s: int, t: int, mask_len: int, rng: np.random.Generator) -> "OracleSet":
        return cls(
            commit=RandomOracle(commitment_length(s, t), rng, name="commit"),
            mask=RandomOracle(mask_len, rng, name="H"),
        )

    def with_mask(self, mask: RandomOracle) -> "OracleSet":
        return OracleSet(commit=self.commit, mask=mask)

    def to_json(self) -> dict[str, Any]:
        return {"commit": self.commit.to_json(), "mask": self.mask.to_json()}

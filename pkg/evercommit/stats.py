"""Aggregation of Monte-Carlo trials: advantages, rates and total-variation distances.

Confidence half-widths use the normal approximation with Laplace-smoothed
proportions, so they stay positive even when every trial agrees.
"""
from __future__ import annotations

from collections import Counter
from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import norm

from .constants import TV_BOOTSTRAP_ROUNDS

Z95 = float(norm.ppf(0.975))

CONDITIONINGS = ("none", "cert-accepted")


@dataclass(frozen=True)
class GameOutcome:
    """One trial of a guessing game: the challenge bit, whether the certificate passed and the guess."""

    b: int
    accepted_cert: bool
    guess: int | None
    queried_point: bool = False


def rate_ci95(k: int, n: int) -> float:
    if n <= 0:
        return 1.0
    p = (k + 1) / (n + 2)
    return Z95 * float(np.sqrt(p * (1 - p) / n))


def advantage_ci95(k0: int, n0: int, k1: int, n1: int) -> float:
    if n0 <= 0 or n1 <= 0:
        return 1.0
    p = (k0 + k1 + 1) / (n0 + n1 + 2)
    return Z95 * float(np.sqrt(p * (1 - p) * (1 / n0 + 1 / n1)))


@dataclass(frozen=True)
class AdvantageEstimate:
    """|Pr[out=1 | b=0] - Pr[out=1 | b=1]| over the kept trials."""

    trials: int
    advantage: float
    ci95: float
    conditioning: str = "none"
    p1_given_b0: float = 0.0
    p1_given_b1: float = 0.0
    kept_trials: int = 0
    cert_accept_rate: float | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.ci95 / Z95

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "trials": self.trials,
            "advantage": self.advantage,
            "ci95": self.ci95,
            "conditioning": self.conditioning,
            "p1_given_b0": self.p1_given_b0,
            "p1_given_b1": self.p1_given_b1,
            "kept_trials": self.kept_trials,
        }
        if self.cert_accept_rate is not None:
            out["cert_accept_rate"] = self.cert_accept_rate
        out.update(self.extras)
        return out


def estimate_advantage(outcomes: Sequence[GameOutcome], *, conditioning: str = "none") -> AdvantageEstimate:
    if conditioning not in CONDITIONINGS:
        raise ValueError(f"unknown conditioning {conditioning!r} (known: {', '.join(CONDITIONINGS)})")
    kept = [o for o in outcomes if conditioning == "none" or o.accepted_cert]
    n0 = sum(1 for o in kept if o.b == 0)
    n1 = len(kept) - n0
    k0 = sum(1 for o in kept if o.b == 0 and o.guess == 1)
    k1 = sum(1 for o in kept if o.b == 1 and o.guess == 1)
    p0 = k0 / n0 if n0 else 0.0
    p1 = k1 / n1 if n1 else 0.0
    accepted = sum(1 for o in outcomes if o.accepted_cert)
    return AdvantageEstimate(
        trials=len(outcomes),
        advantage=abs(p0 - p1) if n0 and n1 else 0.0,
        ci95=advantage_ci95(k0, n0, k1, n1),
        conditioning=conditioning,
        p1_given_b0=p0,
        p1_given_b1=p1,
        kept_trials=len(kept),
        cert_accept_rate=accepted / len(outcomes) if outcomes else None,
    )


@dataclass(frozen=True)
class RateEstimate:
    trials: int
    rate: float
    ci95: float
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.ci95 / Z95

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"trials": self.trials, "rate": self.rate, "ci95": self.ci95}
        out.update(self.extras)
        return out


def estimate_rate(flags: Sequence[bool], **extras: Any) -> RateEstimate:
    n = len(flags)
    k = sum(1 for f in flags if f)
    return RateEstimate(trials=n, rate=k / n if n else 0.0, ci95=rate_ci95(k, n), extras=dict(extras))


@dataclass(frozen=True)
class TvEstimate:
    samples: int
    tv: float
    ci95: float
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.ci95 / Z95

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"samples": self.samples, "tv": self.tv, "ci95": self.ci95}
        out.update(self.extras)
        return out


def empirical_tv(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Total-variation distance between the empirical distributions of two samples."""
    if not a or not b:
        raise ValueError("empirical TV needs two non-empty samples")
    ca, cb = Counter(a), Counter(b)
    na, nb = len(a), len(b)
    return 0.5 * sum(abs(ca.get(k, 0) / na - cb.get(k, 0) / nb) for k in set(ca) | set(cb))


def _codes(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[np.ndarray, np.ndarray, int]:
    index: dict[Hashable, int] = {}
    for v in list(a) + list(b):
        index.setdefault(v, len(index))
    return (
        np.fromiter((index[v] for v in a), dtype=np.intp, count=len(a)),
        np.fromiter((index[v] for v in b), dtype=np.intp, count=len(b)),
        len(index),
    )


def _tv_codes(ca: np.ndarray, cb: np.ndarray, k: int) -> float:
    pa = np.bincount(ca, minlength=k) / ca.size
    pb = np.bincount(cb, minlength=k) / cb.size
    return 0.5 * float(np.abs(pa - pb).sum())


def estimate_tv(
    a: Sequence[Hashable],
    b: Sequence[Hashable],
    rng: np.random.Generator,
    *,
    rounds: int = TV_BOOTSTRAP_ROUNDS,
    **extras: Any,
) -> TvEstimate:
    """Empirical TV plus a bootstrap half-width (1.96 standard deviations of the resampled TV)."""
    tv = empirical_tv(a, b)
    ca, cb, k = _codes(a, b)
    boots = np.empty(int(rounds), dtype=np.float64)
    for i in range(int(rounds)):
        ra = ca[rng.integers(0, ca.size, size=ca.size)]
        rb = cb[rng.integers(0, cb.size, size=cb.size)]
        boots[i] = _tv_codes(ra, rb, k)
    ci = Z95 * float(boots.std(ddof=1)) if rounds > 1 else 0.0
    return TvEstimate(samples=min(len(a), len(b)), tv=tv, ci95=ci, extras=dict(extras))

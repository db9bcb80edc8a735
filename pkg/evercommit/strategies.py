"""Adversary strategies for the hiding, deletion and unpredictability games.

An adversary never sees a BB84 register directly. It gets a view that exposes
the classical part of a ciphertext (and f, h for commitments) plus the two
things a physical receiver can do with the quantum part: measure chosen
positions in chosen bases, or run the honest deletion.
"""
from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .backend import measure_positions
from .commitment import CcdCommitment, CcdDecommitment, CommitParams
from .oracles import OracleSet, commit_classical, extract_classical, ro_query
from .ske import (
    SkeCiphertext,
    SkeDeletionCert,
    SkeError,
    SkeParams,
    SkeSecretKey,
    deserialize_key,
    recover_plaintext,
    ske_dec,
    ske_del,
)
from .util import Bits, as_bits, random_bits, xor_bits

_LOG = logging.getLogger(__name__)

GAME_OTCD = "otcd"
GAME_EVER_HIDE = "everhide"
GAME_C_HIDE = "chide"
GAME_UNPRE = "unpre"
GAME_BIT_EVER_HIDE = "biteverhide"

ALL_GAMES = frozenset({GAME_OTCD, GAME_EVER_HIDE, GAME_C_HIDE, GAME_UNPRE, GAME_BIT_EVER_HIDE})
# Games whose challenge is a quantum ciphertext or commitment.
_CIPHERTEXT_GAMES = frozenset({GAME_OTCD, GAME_EVER_HIDE, GAME_C_HIDE, GAME_BIT_EVER_HIDE})
_DELETION_GAMES = frozenset({GAME_OTCD, GAME_EVER_HIDE, GAME_BIT_EVER_HIDE})


class UnknownStrategy(KeyError):
    pass


class UnsupportedGame(ValueError):
    pass


# ---------------------------------------------------------------------------
# Views and game context
# ---------------------------------------------------------------------------


class CiphertextView:
    """Receiver-side handle on an SKE ciphertext."""

    def __init__(self, ct: SkeCiphertext) -> None:
        self._ct = ct

    @property
    def classical(self) -> Bits:
        return self._ct.classical.copy()

    @property
    def width(self) -> int:
        return self._ct.quantum.width

    def measure(
        self, positions: Sequence[int] | np.ndarray, bases: Sequence[int] | np.ndarray | str, rng: np.random.Generator
    ) -> Bits:
        return measure_positions(self._ct.quantum, np.asarray(positions, dtype=np.intp), bases, rng)

    def delete(self, rng: np.random.Generator) -> SkeDeletionCert:
        return ske_del(self._ct, rng)

    def decrypt(self, sk: SkeSecretKey, rng: np.random.Generator) -> Bits:
        """Honest decryption with a key the adversary holds (measures the computational positions)."""
        return ske_dec(sk, self._ct, rng)


class CommitmentView(CiphertextView):
    def __init__(self, com: CcdCommitment) -> None:
        super().__init__(com.ske_ct)
        self.f = com.f.copy()
        self.h = com.h.copy()


@dataclass(frozen=True)
class Reveal:
    """What the challenger hands over once the certificate checks: the key, and the opening for commitments."""

    sk: SkeSecretKey
    d: CcdDecommitment | None = None


@dataclass(frozen=True)
class GameContext:
    game: str
    params: SkeParams | CommitParams
    messages: tuple[Bits, Bits]
    oracles: OracleSet | None = None

    @property
    def ske(self) -> SkeParams:
        return self.params.ske if isinstance(self.params, CommitParams) else self.params


@dataclass
class Action:
    certs: list[SkeDeletionCert | None]
    notes: dict[str, Any] = field(default_factory=dict)


def guess_from_message(decoded: Bits | None, m0: Bits, m1: Bits, rng: np.random.Generator) -> int:
    """1 if ``decoded`` is m1, 0 if it is m0, otherwise a coin flip."""
    if decoded is not None:
        d = as_bits(decoded)
        if np.array_equal(d, m1):
            return 1
        if np.array_equal(d, m0):
            return 0
    return int(rng.integers(0, 2))


def _decode_with(reveals: Sequence[Reveal], views: Sequence[CiphertextView], rng: np.random.Generator) -> Bits | None:
    try:
        return np.concatenate([v.decrypt(r.sk, rng) for v, r in zip(views, reveals)]).astype(np.uint8)
    except SkeError as e:
        _LOG.debug("decryption with revealed key failed: %s", e)
        return None


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------


class AdversaryStrategy:
    """Random guesser; subclasses override the stages they care about."""

    name = "random"
    games: frozenset[str] = ALL_GAMES

    def options(self) -> dict[str, Any]:
        return {}

    def supports(self, game: str) -> bool:
        return game in self.games

    def choose_messages(self, n: int, rng: np.random.Generator) -> tuple[Bits, Bits]:
        return np.zeros(int(n), dtype=np.uint8), np.ones(int(n), dtype=np.uint8)

    def act_on_challenge(self, views: list[CiphertextView], ctx: GameContext, rng: np.random.Generator) -> Action:
        return Action(certs=[SkeDeletionCert(random_bits(rng, v.width)) for v in views])

    def final_guess(
        self, action: Action, reveals: list[Reveal] | None, ctx: GameContext, rng: np.random.Generator
    ) -> int:
        return int(rng.integers(0, 2))

    def predict_opening(self, f: Bits, ctx: GameContext, rng: np.random.Generator) -> Bits | None:
        params = ctx.params
        if not isinstance(params, CommitParams):
            raise UnsupportedGame("unpredictability needs commitment parameters")
        return random_bits(rng, params.s)

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, **self.options()}


class HonestDeleteStrategy(AdversaryStrategy):
    """Deletes honestly, then tries to decrypt with the revealed key (nothing left to decrypt)."""

    name = "honest-delete"
    games = _CIPHERTEXT_GAMES

    def act_on_challenge(self, views, ctx, rng):
        return Action(certs=[v.delete(rng) for v in views], notes={"views": views})

    def final_guess(self, action, reveals, ctx, rng):
        if reveals is None:
            return int(rng.integers(0, 2))
        decoded = _decode_with(reveals, action.notes["views"], rng)
        return guess_from_message(decoded, *ctx.messages, rng)


class CompMeasureStrategy(AdversaryStrategy):
    """Measures every qubit in the computational basis, then answers with deletion outcomes.

    Once the key arrives the computational positions decode the message.
    """

    name = "comp-measure"
    games = _CIPHERTEXT_GAMES

    def act_on_challenge(self, views, ctx, rng):
        outcomes = [v.measure(np.arange(v.width), np.zeros(v.width, dtype=np.uint8), rng) for v in views]
        certs: list[SkeDeletionCert | None] = [v.delete(rng) for v in views]
        return Action(certs=certs, notes={"views": views, "outcomes": outcomes})

    def final_guess(self, action, reveals, ctx, rng):
        if reveals is None:
            return int(rng.integers(0, 2))
        try:
            decoded = np.concatenate(
                [
                    recover_plaintext(r.sk, v.classical, out[r.sk.comp_positions])
                    for v, r, out in zip(action.notes["views"], reveals, action.notes["outcomes"])
                ]
            ).astype(np.uint8)
        except SkeError:
            decoded = None
        return guess_from_message(decoded, *ctx.messages, rng)


class PartialMeasureStrategy(AdversaryStrategy):
    """Measures a random ``fraction`` of the qubits in the computational basis and deletes the rest.

    Unknown computational positions are filled with coin flips at decode time.
    """

    name = "partial-measure"
    games = _CIPHERTEXT_GAMES

    def __init__(self, fraction: float = 0.5) -> None:
        if not 0.0 <= float(fraction) <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
        self.fraction = float(fraction)

    def options(self):
        return {"fraction": self.fraction}

    def act_on_challenge(self, views, ctx, rng):
        measured: list[tuple[np.ndarray, Bits]] = []
        for v in views:
            k = int(round(self.fraction * v.width))
            pos = np.sort(rng.permutation(v.width)[:k])
            measured.append((pos, v.measure(pos, np.zeros(k, dtype=np.uint8), rng)))
        certs: list[SkeDeletionCert | None] = [v.delete(rng) for v in views]
        return Action(certs=certs, notes={"views": views, "measured": measured})

    def final_guess(self, action, reveals, ctx, rng):
        if reveals is None:
            return int(rng.integers(0, 2))
        parts = []
        for v, r, (pos, vals) in zip(action.notes["views"], reveals, action.notes["measured"]):
            guess_r = random_bits(rng, v.width)
            guess_r[pos] = vals
            try:
                parts.append(recover_plaintext(r.sk, v.classical, guess_r[r.sk.comp_positions]))
            except SkeError:
                return int(rng.integers(0, 2))
        return guess_from_message(np.concatenate(parts).astype(np.uint8), *ctx.messages, rng)


class CertForgerStrategy(AdversaryStrategy):
    """Keeps the first ``forge`` challenge states intact and submits uniform certificates for them.

    The remaining states are deleted honestly. When a forged certificate slips
    through, the kept states decrypt exactly with the revealed keys and the
    guess compares those positions of the message.
    """

    name = "cert-forger"
    games = _DELETION_GAMES

    def __init__(self, forge: int = 1) -> None:
        if int(forge) < 1:
            raise ValueError(f"forge must be >= 1, got {forge}")
        self.forge = int(forge)

    def options(self):
        return {"forge": self.forge}

    def act_on_challenge(self, views, ctx, rng):
        k = min(self.forge, len(views))
        certs: list[SkeDeletionCert | None] = [SkeDeletionCert(random_bits(rng, v.width)) for v in views[:k]]
        certs += [v.delete(rng) for v in views[k:]]
        return Action(certs=certs, notes={"views": views[:k]})

    def final_guess(self, action, reveals, ctx, rng):
        if reveals is None:
            return int(rng.integers(0, 2))
        kept = action.notes["views"]
        decoded = _decode_with(reveals[: len(kept)], kept, rng)
        if decoded is None:
            return int(rng.integers(0, 2))
        m0, m1 = ctx.messages
        width = decoded.size
        return guess_from_message(decoded, m0[:width], m1[:width], rng)


class BruteForceStrategy(AdversaryStrategy):
    """Unbounded receiver: inverts f by searching the whole opening space, unmasks sk and decrypts before deleting.

    Needs s + t small enough for the search (the small preset).
    """

    name = "brute-force"
    games = frozenset({GAME_EVER_HIDE, GAME_C_HIDE, GAME_UNPRE, GAME_BIT_EVER_HIDE})

    def _extract(self, f: Bits, ctx: GameContext) -> Bits | None:
        params = ctx.params
        if ctx.oracles is None or not isinstance(params, CommitParams):
            raise UnsupportedGame("brute-force needs the commitment oracles")
        return extract_classical(f, ctx.oracles.commit, params.s, params.t)

    def act_on_challenge(self, views, ctx, rng):
        assert ctx.oracles is not None
        decoded: list[Bits] = []
        for v in views:
            if not isinstance(v, CommitmentView):
                raise UnsupportedGame("brute-force works on commitments only")
            r = self._extract(v.f, ctx)
            if r is None:
                decoded = []
                break
            sk_bits = xor_bits(ro_query(ctx.oracles.mask, r), v.h)
            try:
                sk = deserialize_key(sk_bits, ctx.ske)
            except SkeError:
                decoded = []
                break
            decoded.append(v.decrypt(sk, rng))
        certs: list[SkeDeletionCert | None] = [v.delete(rng) for v in views]
        message = np.concatenate(decoded).astype(np.uint8) if decoded else None
        return Action(certs=certs, notes={"decoded": message})

    def final_guess(self, action, reveals, ctx, rng):
        return guess_from_message(action.notes.get("decoded"), *ctx.messages, rng)

    def predict_opening(self, f, ctx, rng):
        return self._extract(f, ctx)


class ParityStrategy(AdversaryStrategy):
    """Guesses the parity of the classical ciphertext part; deletes honestly."""

    name = "parity"
    games = _CIPHERTEXT_GAMES

    def act_on_challenge(self, views, ctx, rng):
        parity = int(sum(int(v.classical.sum()) for v in views) % 2)
        return Action(certs=[v.delete(rng) for v in views], notes={"parity": parity})

    def final_guess(self, action, reveals, ctx, rng):
        return int(action.notes["parity"])


class NoQueryGuessStrategy(AdversaryStrategy):
    """Bounded search: tries ``budget`` random openings against f, guesses uniformly otherwise."""

    name = "no-query-guess"
    games = frozenset({GAME_UNPRE})

    def __init__(self, budget: int = 64) -> None:
        self.budget = max(0, int(budget))

    def options(self):
        return {"budget": self.budget}

    def predict_opening(self, f, ctx, rng):
        params = ctx.params
        if ctx.oracles is None or not isinstance(params, CommitParams):
            raise UnsupportedGame("no-query-guess needs the commitment oracles")
        target = as_bits(f)
        for _ in range(self.budget):
            r = random_bits(rng, params.s)
            if np.array_equal(commit_classical(r, random_bits(rng, params.t), ctx.oracles.commit), target):
                return r
        return random_bits(rng, params.s)


class NeverAnswerStrategy(AdversaryStrategy):
    name = "never-answer"
    games = frozenset({GAME_UNPRE})

    def predict_opening(self, f, ctx, rng):
        return None


STRATEGIES: dict[str, Callable[..., AdversaryStrategy]] = {
    "random": AdversaryStrategy,
    "honest-delete": HonestDeleteStrategy,
    "comp-measure": CompMeasureStrategy,
    "partial-measure": PartialMeasureStrategy,
    "cert-forger": CertForgerStrategy,
    "brute-force": BruteForceStrategy,
    "parity": ParityStrategy,
    "no-query-guess": NoQueryGuessStrategy,
    "never-answer": NeverAnswerStrategy,
}

# Constructor keywords each strategy accepts from the command line.
STRATEGY_OPTIONS: dict[str, tuple[str, ...]] = {
    "partial-measure": ("fraction",),
    "cert-forger": ("forge",),
    "no-query-guess": ("budget",),
}


def get_strategy(name: str, **options: Any) -> AdversaryStrategy:
    try:
        factory = STRATEGIES[name]
    except KeyError as e:
        raise UnknownStrategy(f"unknown strategy {name!r} (known: {', '.join(sorted(STRATEGIES))})") from e
    return factory(**options)


def require_support(strategy: AdversaryStrategy, game: str) -> None:
    if not strategy.supports(game):
        known = ", ".join(sorted(strategy.games))
        raise UnsupportedGame(f"strategy {strategy.name!r} does not play {game!r} (plays: {known})")


from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from evercommit.commitment import CommitParams
from evercommit.instances import Instance, frustrated_instance, ghz_instance

REPO_ROOT = Path(__file__).resolve().parents[1]
INSTANCES_DIR = REPO_ROOT / "instances"

# Best acceptance on the frustrated instance: (1 + 1/sqrt(2)) / 2.
FRUSTRATED_BOUND = (1 + 2 ** -0.5) / 2


def small_params(**overrides: int) -> CommitParams:
    """The small preset (mu=8, mu_comp=4, s=t=8, 4-bit messages) with optional overrides."""
    return CommitParams.from_preset("small", **overrides)


def default_params(**overrides: int) -> CommitParams:
    return CommitParams.from_preset("default", **overrides)


def within_sigma(value: float, expected: float, sigma: float, k: float = 4.0) -> bool:
    return abs(value - expected) <= k * sigma


def binomial_sigma(p: float, n: int) -> float:
    return float(np.sqrt(p * (1 - p) / n))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def ghz() -> Instance:
    return ghz_instance()


@pytest.fixture
def frustrated() -> Instance:
    return frustrated_instance()


@pytest.fixture
def instance_files(tmp_path: Path) -> dict[str, Path]:
    """The bundled instances written to tmp_path the way `make-instance` writes them."""
    from evercommit.util import dumps_pretty

    out = {}
    for inst in (ghz_instance(), frustrated_instance()):
        p = tmp_path / f"{inst.name}.json"
        p.write_text(dumps_pretty(inst.to_json()) + "\n", encoding="utf-8")
        out[inst.name] = p
    return out

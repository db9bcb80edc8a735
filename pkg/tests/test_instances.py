from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from evercommit.backend import Povm, povm_prob
from evercommit.instances import (
    Instance,
    InstanceError,
    averaged_check_operator,
    bundled_instances,
    instance_from_json,
    load_instance,
    local_sim,
    optimal_cheating_state,
    soundness_bound,
)

from tests.conftest import FRUSTRATED_BOUND, INSTANCES_DIR

_I2 = np.eye(2)
_X = np.array([[0, 1], [1, 0]])
_Z = np.array([[1, 0], [0, -1]])


def _minimal(n: int = 2, **extra: object) -> dict[str, object]:
    obj: dict[str, object] = {"n": n, "kind": "no", "checks": [{"support": [1], "projector": [[1, 0], [0, 0]]}]}
    obj.update(extra)
    return obj


def test_ghz_witness_passes_every_check(ghz: Instance) -> None:
    assert ghz.m == 3
    assert ghz.witness_acceptance() == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)
    assert soundness_bound(ghz) == pytest.approx(1.0, abs=1e-9)


def test_frustrated_bound(frustrated: Instance) -> None:
    assert soundness_bound(frustrated) == pytest.approx(FRUSTRATED_BOUND, abs=1e-9)
    with pytest.raises(InstanceError):
        frustrated.require_witness()


def test_optimal_state_reaches_the_bound(frustrated: Instance) -> None:
    rho = optimal_cheating_state(frustrated)
    avg = np.mean([povm_prob(rho, povm) for povm in frustrated.checks])
    assert avg == pytest.approx(FRUSTRATED_BOUND, abs=1e-9)


def test_sparse_bound_matches_dense() -> None:
    n = 9
    inst = Instance(
        n=n,
        checks=(
            Povm((0,), (_I2 + _Z) / 2),
            Povm((0,), (_I2 + _X) / 2),
            Povm((3, 8), (np.eye(4) + np.kron(_Z, _Z)) / 2),
        ),
        kind="no",
    )
    dense = float(np.linalg.eigvalsh(averaged_check_operator(inst))[-1])
    assert soundness_bound(inst) == pytest.approx(dense, abs=1e-8)
    assert dense == pytest.approx((2 * FRUSTRATED_BOUND + 1) / 3, abs=1e-9)


def test_local_sim_reduces_the_witness(ghz: Instance) -> None:
    assert np.allclose(local_sim(ghz, (0,)).rho, np.eye(2) / 2)
    pair = local_sim(ghz, (0, 1)).rho
    assert pair[0, 0].real == pytest.approx(0.5)
    assert pair[3, 3].real == pytest.approx(0.5)
    assert abs(pair[0, 3]) == pytest.approx(0.0, abs=1e-12)


def test_bundled_files_load() -> None:
    for name, inst in bundled_instances().items():
        loaded = load_instance(INSTANCES_DIR / f"{name}.json")
        assert loaded.name == name
        assert loaded.n == inst.n
        assert [c.support for c in loaded.checks] == [c.support for c in inst.checks]
        assert soundness_bound(loaded) == pytest.approx(soundness_bound(inst), abs=1e-9)


def test_json_uses_one_based_supports(ghz: Instance, instance_files: dict[str, Path]) -> None:
    js = ghz.to_json()
    assert [c["support"] for c in js["checks"]] == [[1, 2], [2, 3], [1, 2, 3]]
    again = load_instance(instance_files["ghz"])
    assert again.witness is not None
    assert np.allclose(again.witness.rho, ghz.require_witness().rho)


def test_load_errors(tmp_path: Path) -> None:
    with pytest.raises(InstanceError, match="not found"):
        load_instance(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(InstanceError, match="not valid JSON"):
        load_instance(bad)


@pytest.mark.parametrize(
    "obj, needle",
    [
        ([], "JSON object"),
        ({"checks": []}, "'n'"),
        (_minimal(n=13), "dimension cap"),
        (_minimal(checks=[{"support": [0], "projector": [[1, 0], [0, 0]]}]), "1-based"),
        (_minimal(checks=[{"support": [2, 1], "projector": np.eye(4).tolist()}]), "ascending"),
        (_minimal(checks=[{"support": [1], "projector": [[0.5, 0], [0, 0.5]]}]), "check 0"),
        (_minimal(checks=[{"projector": [[1, 0], [0, 0]]}]), "check 0"),
        (_minimal(checks=[]), "no checks"),
        (_minimal(kind="maybe"), "kind"),
        (_minimal(witness={"n": 1, "rho": [[1, 0], [0, 0]]}), "witness"),
    ],
)
def test_instance_from_json_rejects(obj: object, needle: str) -> None:
    with pytest.raises(InstanceError, match=needle):
        instance_from_json(obj)


def test_support_size_cap() -> None:
    with pytest.raises(InstanceError, match="exceeds"):
        Instance(n=6, checks=(Povm(tuple(range(6)), np.eye(64)),))


def test_to_json_round_trip_keeps_kind_and_name(frustrated: Instance) -> None:
    back = instance_from_json(json.loads(json.dumps(frustrated.to_json())))
    assert back.kind == "no"
    assert back.name == "frustrated"
    assert back.witness is None

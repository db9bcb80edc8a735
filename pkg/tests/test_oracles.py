from __future__ import annotations

import numpy as np
import pytest

from evercommit.oracles import (
    CommitmentCollision,
    OracleError,
    OracleSet,
    RandomOracle,
    SearchSpaceTooLarge,
    commit_classical,
    commitment_length,
    extract_classical,
    find_openings,
    ro_query,
    ro_reprogram,
    verify_opening,
)
from evercommit.util import as_bits, random_bits


def test_query_is_consistent_and_logged(rng: np.random.Generator) -> None:
    h = RandomOracle(16, rng)
    a = ro_query(h, as_bits("0101"))
    b = ro_query(h, as_bits("0101"))
    assert a.tolist() == b.tolist()
    assert a.size == 16
    assert len(h.query_log) == 2
    assert h.queried(as_bits("0101"))
    assert not h.queried(as_bits("0100"))


def test_inputs_of_different_length_are_different_points(rng: np.random.Generator) -> None:
    h = RandomOracle(64, rng)
    assert ro_query(h, as_bits("0")).tolist() != ro_query(h, as_bits("00")).tolist()


def test_reprogram_shadows_only_the_patched_point(rng: np.random.Generator) -> None:
    h = RandomOracle(8, rng)
    before = ro_query(h, as_bits("11"))
    other = ro_query(h, as_bits("10"))
    ro_reprogram(h, as_bits("11"), as_bits("00000001"))
    assert ro_query(h, as_bits("11")).tolist() == [0, 0, 0, 0, 0, 0, 0, 1]
    assert ro_query(h, as_bits("10")).tolist() == other.tolist()
    assert before.size == 8
    with pytest.raises(OracleError):
        ro_reprogram(h, as_bits("11"), as_bits("1"))


def test_fork_shares_the_function_but_not_patches_or_log(rng: np.random.Generator) -> None:
    h = RandomOracle(8, rng)
    fork = h.fork("H_A1")
    x = as_bits("1010")
    original = ro_query(fork, x)
    assert ro_query(h, x).tolist() == original.tolist()

    ro_reprogram(fork, x, np.zeros(8, dtype=np.uint8))
    assert ro_query(fork, x).tolist() == [0] * 8
    assert ro_query(h, x).tolist() == original.tolist()
    assert fork.name == "H_A1"
    assert len(fork.query_log) == 2
    assert len(h.query_log) == 2


def test_invalid_oracle_length(rng: np.random.Generator) -> None:
    with pytest.raises(OracleError):
        RandomOracle(0, rng)


def test_commitment_length_and_verify(rng: np.random.Generator) -> None:
    assert commitment_length(16, 16) == 96
    o = RandomOracle(commitment_length(4, 4), rng)
    r, rp = random_bits(rng, 4), random_bits(rng, 4)
    f = commit_classical(r, rp, o)
    assert verify_opening(f, r, rp, o)
    wrong = r.copy()
    wrong[0] ^= 1
    assert not verify_opening(f, wrong, rp, o)
    # wrong lengths never verify
    assert not verify_opening(f, as_bits("1"), rp, o)
    with pytest.raises(OracleError):
        commit_classical(as_bits(""), rp, o)


def test_commit_rejects_oracle_of_wrong_length(rng: np.random.Generator) -> None:
    with pytest.raises(OracleError):
        commit_classical(as_bits("01"), as_bits("10"), RandomOracle(8, rng))


def test_extract_recovers_the_committed_message(rng: np.random.Generator) -> None:
    for _ in range(20):
        o = RandomOracle(commitment_length(8, 8), rng)
        r, rp = random_bits(rng, 8), random_bits(rng, 8)
        f = commit_classical(r, rp, o)
        got = extract_classical(f, o, 8, 8)
        assert got is not None
        assert got.tolist() == r.tolist()


def test_extract_random_string_finds_nothing(rng: np.random.Generator) -> None:
    o = RandomOracle(commitment_length(8, 8), rng)
    assert extract_classical(random_bits(rng, o.out_len), o, 8, 8) is None
    # wrong length f
    assert find_openings(random_bits(rng, 3), o, 8, 8) == []


def test_find_openings_keeps_the_table_small(rng: np.random.Generator) -> None:
    o = RandomOracle(commitment_length(10, 10), rng)
    f = commit_classical(random_bits(rng, 10), random_bits(rng, 10), o)
    find_openings(f, o, 10, 10)
    # 2^20 candidate openings; only the committed one and lazily planted hits are stored
    assert len(o.table) < 10


def test_find_openings_respects_patches(rng: np.random.Generator) -> None:
    o = RandomOracle(commitment_length(4, 4), rng)
    target = random_bits(rng, o.out_len)
    point = as_bits("10100101")
    ro_reprogram(o, point, target)
    openings = find_openings(target, o, 4, 4)
    assert [(r.tolist(), rp.tolist()) for r, rp in openings] == [([1, 0, 1, 0], [0, 1, 0, 1])]


def test_collision_is_reported(rng: np.random.Generator) -> None:
    o = RandomOracle(commitment_length(4, 4), rng)
    target = random_bits(rng, o.out_len)
    ro_reprogram(o, as_bits("00000000"), target)
    ro_reprogram(o, as_bits("11110000"), target)
    with pytest.raises(CommitmentCollision) as exc:
        extract_classical(target, o, 4, 4)
    assert len(exc.value.openings) == 2


def test_search_space_cap(rng: np.random.Generator) -> None:
    o = RandomOracle(commitment_length(16, 16), rng)
    with pytest.raises(SearchSpaceTooLarge):
        find_openings(random_bits(rng, o.out_len), o, 16, 16)


def test_oracle_set_fresh_and_with_mask(rng: np.random.Generator) -> None:
    oracles = OracleSet.fresh(8, 8, 19, rng)
    assert oracles.commit.out_len == 80
    assert oracles.mask.out_len == 19
    other = RandomOracle(19, rng, name="H_A2")
    swapped = oracles.with_mask(other)
    assert swapped.commit is oracles.commit
    assert swapped.mask is other
    js = oracles.to_json()
    assert js["commit"]["out_len"] == 80

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import chisquare

from evercommit.commitment import (
    CcdDecommitment,
    CommitmentError,
    CommitParams,
    ccd_cert,
    ccd_commit,
    ccd_del,
    ccd_extract,
    ccd_verify,
    ccd_verify1,
    ccd_verify2,
    ccd_verify_sum,
)
from evercommit.oracles import OracleSet
from evercommit.util import as_bits, bits_to_int, random_bits

from tests.conftest import binomial_sigma, default_params, small_params


def test_params_from_presets() -> None:
    small = small_params()
    assert (small.msg_len, small.s, small.t, small.q, small.mask_len) == (4, 8, 8, 80, 19)
    bits = small.for_bits()
    assert bits.msg_len == 1
    assert bits.mask_len == 8 + 1 + 4
    assert default_params().q == 96
    assert default_params(msg_len=2, s=4).to_json()["s"] == 4
    assert small.with_msg_len(2).msg_len == 2


def test_params_validation() -> None:
    with pytest.raises(CommitmentError):
        CommitParams.from_preset("nope")
    with pytest.raises(CommitmentError):
        CommitParams.from_preset("small", msg_len=5)
    with pytest.raises(CommitmentError):
        small_params(s=0)


def test_honest_commit_opens_to_the_message(rng: np.random.Generator) -> None:
    params = small_params()
    for _ in range(1000):
        oracles = params.new_oracles(rng)
        m = random_bits(rng, params.msg_len)
        com, d, _ = ccd_commit(m, rng, oracles, params)
        out = ccd_verify(com, d, oracles, params, rng)
        assert out is not None
        assert out.tolist() == m.tolist()


def test_default_preset_round_trip(rng: np.random.Generator) -> None:
    params = default_params()
    oracles = params.new_oracles(rng)
    m = as_bits("10110001")
    com, d, key = ccd_commit(m, rng, oracles, params)
    assert com.f.size == params.q
    assert com.h.size == params.mask_len
    assert ccd_verify(com, d, oracles, params, rng).tolist() == m.tolist()


def test_tampered_opening_is_rejected(rng: np.random.Generator) -> None:
    params = small_params()
    oracles = params.new_oracles(rng)
    com, d, _ = ccd_commit(as_bits("0101"), rng, oracles, params)
    d1 = d.d1.copy()
    d1[0] ^= 1
    assert ccd_verify(com, CcdDecommitment(d1, d.d2), oracles, params, rng) is None
    assert not ccd_verify1(com, CcdDecommitment(d.d1, d.d2[:-1]), oracles)


def test_wrong_key_unmasking_yields_a_uniform_message(rng: np.random.Generator) -> None:
    params = small_params()
    n = 10_000
    counts = np.zeros(2 ** params.msg_len, dtype=np.int64)
    for _ in range(n):
        oracles = params.new_oracles(rng)
        com, d, _ = ccd_commit(as_bits("0101"), rng, oracles, params)
        other = random_bits(rng, params.s)
        while np.array_equal(other, d.d1):
            other = random_bits(rng, params.s)
        out = ccd_verify2(com, other, oracles, params, rng)
        assert out.size == params.msg_len
        counts[bits_to_int(out)] += 1
    assert chisquare(counts).pvalue > 1e-3


def test_opening_after_deletion_is_a_guess(rng: np.random.Generator) -> None:
    params = default_params()
    n = 10_000
    hits = 0
    for _ in range(n):
        oracles = params.new_oracles(rng)
        m = random_bits(rng, params.msg_len)
        com, d, _ = ccd_commit(m, rng, oracles, params)
        ccd_del(com, rng)
        hits += ccd_verify2(com, d.d1, oracles, params, rng).tolist() == m.tolist()
    p = 2.0 ** -params.msg_len
    assert hits / n <= p + 3 * binomial_sigma(p, n)


def test_honest_deletion_certificate_is_accepted(rng: np.random.Generator) -> None:
    params = small_params()
    for _ in range(1000):
        oracles = params.new_oracles(rng)
        com, _, key = ccd_commit(random_bits(rng, 4), rng, oracles, params)
        assert ccd_cert(ccd_del(com, rng), key)


def test_extract_matches_the_opening(rng: np.random.Generator) -> None:
    params = small_params()
    oracles = params.new_oracles(rng)
    com, d, _ = ccd_commit(as_bits("1111"), rng, oracles, params)
    got = ccd_extract(com.f, oracles, params)
    assert got is not None
    assert got.tolist() == d.d1.tolist()


def test_commit_validates_lengths(rng: np.random.Generator) -> None:
    params = small_params()
    oracles = params.new_oracles(rng)
    with pytest.raises(CommitmentError):
        ccd_commit(as_bits("01"), rng, oracles, params)
    wrong = OracleSet.fresh(params.s, params.t, params.mask_len + 1, rng)
    with pytest.raises(CommitmentError):
        ccd_commit(as_bits("0101"), rng, wrong, params)


def test_verify_sum_on_bits(rng: np.random.Generator) -> None:
    params = small_params().for_bits()
    for b in (0, 1):
        oracles = params.new_oracles(rng)
        com, d, _ = ccd_commit(as_bits([b]), rng, oracles, params)
        assert ccd_verify_sum(com.copy(), d, b, oracles, params, rng)
        assert not ccd_verify_sum(com.copy(), d, 1 - b, oracles, params, rng)


def test_verify_sum_validation(rng: np.random.Generator) -> None:
    params = small_params()
    oracles = params.new_oracles(rng)
    com, d, _ = ccd_commit(as_bits("0000"), rng, oracles, params)
    with pytest.raises(CommitmentError):
        ccd_verify_sum(com, d, 0, oracles, params, rng)
    bit_params = params.for_bits()
    bit_oracles = bit_params.new_oracles(rng)
    com, d, _ = ccd_commit(as_bits("1"), rng, bit_oracles, bit_params)
    with pytest.raises(CommitmentError):
        ccd_verify_sum(com, d, 2, bit_oracles, bit_params, rng)


def test_commitment_json_hides_the_quantum_part(rng: np.random.Generator) -> None:
    params = small_params()
    oracles = params.new_oracles(rng)
    com, d, key = ccd_commit(as_bits("0011"), rng, oracles, params)
    js = com.to_json()
    assert set(js) == {"ske_classical", "f", "h"}
    assert "bb84" in com.to_json(debug=True)
    assert set(d.to_json()) == {"d1", "d2"}
    assert "theta" in key.to_json()

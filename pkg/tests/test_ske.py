from __future__ import annotations

import numpy as np
import pytest

from evercommit.backend import measure_all
from evercommit.ske import (
    SkeDeletionCert,
    SkeError,
    SkeParams,
    deserialize_key,
    serialize_key,
    ske_dec,
    ske_del,
    ske_enc,
    ske_keygen,
    ske_verify,
    toeplitz_hash,
)
from evercommit.util import as_bits, random_bits

from tests.conftest import binomial_sigma, within_sigma

SMALL = SkeParams.from_preset("small")


def test_params_defaults_and_validation() -> None:
    p = SkeParams(msg_len=4, mu=10)
    assert p.comp == 5
    assert p.hadamard_count == 5
    assert p.seed_len == 8
    assert p.key_bits == 10 + 4 + 8

    with pytest.raises(SkeError):
        SkeParams(msg_len=1, mu=1)
    with pytest.raises(SkeError):
        SkeParams(msg_len=1, mu=8, mu_comp=8)
    with pytest.raises(SkeError):
        SkeParams(msg_len=5, mu=8, mu_comp=4)
    with pytest.raises(SkeError):
        SkeParams(msg_len=1, mu=8, cert_threshold=-1)
    with pytest.raises(SkeError):
        SkeParams.from_preset("huge")


def test_preset_key_lengths() -> None:
    assert SkeParams.from_preset("default").key_bits == 32 + 8 + 23
    assert SMALL.key_bits == 8 + 4 + 7


def test_keygen_theta_has_exact_weight(rng: np.random.Generator) -> None:
    for _ in range(50):
        sk = ske_keygen(SMALL, rng)
        assert int(sk.theta.sum()) == SMALL.hadamard_count
        assert sk.comp_positions.size == SMALL.comp
        assert sk.r is None


def test_decryption_recovers_message(rng: np.random.Generator) -> None:
    for _ in range(1000):
        sk = ske_keygen(SMALL, rng)
        m = random_bits(rng, SMALL.msg_len)
        ct = ske_enc(sk, m, rng)
        assert ske_dec(sk, ct, rng).tolist() == m.tolist()


def test_honest_deletion_always_verifies(rng: np.random.Generator) -> None:
    params = SkeParams.from_preset("default")
    for _ in range(1000):
        sk = ske_keygen(params, rng)
        ct = ske_enc(sk, random_bits(rng, params.msg_len), rng)
        assert ske_verify(sk, ske_del(ct, rng))


def test_key_is_one_time(rng: np.random.Generator) -> None:
    sk = ske_keygen(SMALL, rng)
    ske_enc(sk, as_bits("0000"), rng)
    with pytest.raises(SkeError):
        ske_enc(sk, as_bits("0000"), rng)


def test_enc_and_verify_validation(rng: np.random.Generator) -> None:
    sk = ske_keygen(SMALL, rng)
    with pytest.raises(SkeError):
        ske_verify(sk, SkeDeletionCert(np.zeros(SMALL.mu, dtype=np.uint8)))
    with pytest.raises(SkeError):
        ske_enc(sk, as_bits("0"), rng)
    ske_enc(sk, as_bits("0110"), rng)
    with pytest.raises(SkeError):
        ske_verify(sk, SkeDeletionCert(np.zeros(3, dtype=np.uint8)))


def test_random_certificate_passes_at_forging_rate(rng: np.random.Generator) -> None:
    n = 4000
    hits = 0
    for _ in range(n):
        sk = ske_keygen(SMALL, rng)
        ske_enc(sk, as_bits("1010"), rng)
        hits += ske_verify(sk, SkeDeletionCert(random_bits(rng, SMALL.mu)))
    p = 2.0 ** -SMALL.hadamard_count
    assert within_sigma(hits / n, p, binomial_sigma(p, n))


def test_computational_measurement_breaks_the_certificate(rng: np.random.Generator) -> None:
    n = 2000
    hits = 0
    for _ in range(n):
        sk = ske_keygen(SMALL, rng)
        ct = ske_enc(sk, as_bits("1111"), rng)
        measure_all(ct.quantum, np.zeros(SMALL.mu, dtype=np.uint8), rng)
        hits += ske_verify(sk, ske_del(ct, rng))
    p = 2.0 ** -SMALL.hadamard_count
    assert within_sigma(hits / n, p, binomial_sigma(p, n))


def test_decryption_after_deletion_is_a_guess(rng: np.random.Generator) -> None:
    params = SkeParams.from_preset("default")
    n = 10_000
    hits = 0
    for _ in range(n):
        sk = ske_keygen(params, rng)
        m = random_bits(rng, params.msg_len)
        ct = ske_enc(sk, m, rng)
        ske_del(ct, rng)
        hits += ske_dec(sk, ct, rng).tolist() == m.tolist()
    # Hadamard collapse leaves the computational positions uniform.
    p = 2.0 ** -params.msg_len
    assert hits / n <= p + 3 * binomial_sigma(p, n)


def test_threshold_tolerates_mismatches(rng: np.random.Generator) -> None:
    lenient = SkeParams(msg_len=4, mu=8, mu_comp=4, cert_threshold=4)
    sk = ske_keygen(lenient, rng)
    ske_enc(sk, as_bits("0001"), rng)
    assert ske_verify(sk, SkeDeletionCert(random_bits(rng, 8)))


def test_serialized_key_round_trip_and_weight_check(rng: np.random.Generator) -> None:
    sk = ske_keygen(SMALL, rng)
    bits = serialize_key(sk)
    assert bits.size == SMALL.key_bits
    back = deserialize_key(bits, SMALL)
    assert back.theta.tolist() == sk.theta.tolist()
    assert back.hash_seed.tolist() == sk.hash_seed.tolist()

    bad = bits.copy()
    bad[:SMALL.mu] = 0
    with pytest.raises(SkeError):
        deserialize_key(bad, SMALL)
    with pytest.raises(SkeError):
        deserialize_key(bits[:-1], SMALL)


def test_toeplitz_hash_matches_explicit_matrix(rng: np.random.Generator) -> None:
    n_in, out = 6, 3
    seed = random_bits(rng, n_in + out - 1)
    x = random_bits(rng, n_in)
    mat = np.array([[seed[out - 1 - i + j] for j in range(n_in)] for i in range(out)])
    assert toeplitz_hash(seed, x, out).tolist() == ((mat @ x) % 2).tolist()
    with pytest.raises(SkeError):
        toeplitz_hash(seed[:-1], x, out)


def test_toeplitz_hash_is_linear(rng: np.random.Generator) -> None:
    seed = random_bits(rng, 10)
    a, b = random_bits(rng, 7), random_bits(rng, 7)
    lhs = toeplitz_hash(seed, a ^ b, 4)
    rhs = toeplitz_hash(seed, a, 4) ^ toeplitz_hash(seed, b, 4)
    assert lhs.tolist() == rhs.tolist()

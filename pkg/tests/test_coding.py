import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arqradio.channel import Dmc, binary_symmetric_channel, example1_channel, example3_channel
from arqradio.coding import (
    InputType,
    bits_to_int,
    bits_to_ints,
    build_codebook,
    capacity_input,
    count_types,
    emulate_ml_decode,
    enumerate_types,
    fragment_width,
    frame_activity_statistic,
    frame_activity_test,
    int_to_bits,
    ints_to_bits,
    ml_decode,
    ml_success_log_probability,
    select_codebook,
    selection_budget,
    type_blocks,
    type_rank,
    type_unrank,
)
from arqradio.errors import ConfigurationError, DomainError
from arqradio.rib import mutual_information


@given(st.integers(1, 4), st.integers(1, 64))
def test_type_count(X, C_n):
    types = enumerate_types(X, C_n) if count_types(X, C_n) < 60_000 else None
    expected = math.comb(C_n + X - 1, X - 1)
    assert count_types(X, C_n) == expected <= (C_n + 1) ** X
    if types is not None:
        assert len(types) == expected
        assert all(t.denominator == C_n for t in types)
        assert len({t.counts for t in types}) == expected


def test_enumeration_order():
    assert [t.counts for t in enumerate_types(2, 2)] == [(2, 0), (1, 1), (0, 2)]


@given(st.integers(1, 5), st.integers(1, 20), st.data())
def test_rank_unrank_round_trip(X, C_n, data):
    r = data.draw(st.integers(0, count_types(X, C_n) - 1))
    t = type_unrank(r, X, C_n)
    assert type_rank(t) == r
    assert t.denominator == C_n


def test_rank_matches_enumeration():
    for r, t in enumerate(enumerate_types(3, 6)):
        assert type_rank(t) == r


def test_type_blocks_cover_enumeration():
    rows = np.concatenate(list(type_blocks(4, 7, max_rows=13)))
    assert [tuple(r) for r in rows.tolist()] == [t.counts for t in enumerate_types(4, 7)]


def test_input_type_validation():
    with pytest.raises(ConfigurationError):
        InputType((0, 0))
    with pytest.raises(DomainError):
        type_unrank(10, 2, 2)


@given(st.integers(1, 200), st.floats(0.0, 2.0), st.floats(0.0, 0.3))
def test_codebook_size(ell, rate, dt):
    M = math.floor(math.exp(ell * max(rate - dt, 0.0)))
    assert fragment_width(ell, max(rate - dt, 0.0), max(M, 1)) <= math.log2(max(M, 1)) + 1e-9


def test_codebook_message_count_and_law():
    dmc = binary_symmetric_channel(0.11)
    t = InputType((3, 1))
    cb = build_codebook(t, 40, 0.02, dmc, seed=7)
    rate = max(mutual_information(t.distribution, dmc.transition) - 0.02, 0.0)
    assert cb.rate_nats == pytest.approx(rate)
    assert cb.message_count == max(1, math.floor(math.exp(40 * rate)))
    assert cb.explicit
    freq = np.bincount(cb.codewords.ravel(), minlength=2) / cb.codewords.size
    assert abs(freq[1] - 0.25) < 5 * math.sqrt(0.25 * 0.75 / cb.codewords.size)


def test_codebook_reproducible_from_seed():
    dmc = example1_channel(3)
    a = build_codebook("fixed", 30, 0.05, dmc, seed=3)
    b = build_codebook("fixed", 30, 0.05, dmc, seed=3)
    assert not a.explicit
    for m in (0, 1, 12345, a.message_count - 1):
        np.testing.assert_array_equal(a.codeword(m), b.codeword(m))
    assert not np.array_equal(a.codeword(5), build_codebook("fixed", 30, 0.05, dmc, seed=4).codeword(5))


def test_capacity_input_is_uniform_on_noiseless_channel():
    c, p = capacity_input(example1_channel(3))
    assert c == pytest.approx(math.log(4))
    np.testing.assert_allclose(p, 0.25, atol=1e-9)


@given(st.integers(0, 2**20), st.data())
def test_ml_decode_noiseless_image(seed, data):
    dmc = example1_channel(3)
    cb = build_codebook("fixed", 6, 0.3, dmc, seed=seed)
    assert cb.explicit
    m = data.draw(st.integers(0, cb.message_count - 1))
    y = cb.codeword(m)
    # duplicate codewords resolve to the smallest index
    first = int(np.flatnonzero((cb.codewords == y).all(axis=1))[0])
    assert ml_decode(cb, dmc, y) == first


def test_ml_success_probability_on_noiseless_channel():
    dmc = example1_channel(1)
    cb = build_codebook(InputType((1, 1)), 3, 0.0, dmc, seed=0, memory_cap=0)
    assert not cb.explicit
    for sent in (0, 1, 2):
        y = cb.codeword(sent)
        got = ml_success_log_probability(cb, dmc, y, sent, candidates=4)
        assert got == pytest.approx(sent * math.log(7 / 8))


def test_emulated_decoder_frequency():
    dmc = example1_channel(1)
    cb = build_codebook(InputType((1, 1)), 3, 0.0, dmc, seed=0, memory_cap=0)
    rng = np.random.default_rng(0)
    y = cb.codeword(3)
    hits = sum(emulate_ml_decode(cb, dmc, y, 3, rng, 8) == 3 for _ in range(20_000))
    p = (7 / 8) ** 3
    assert abs(hits / 20_000 - p) < 5 * math.sqrt(p * (1 - p) / 20_000)


def test_frame_activity_test_on_noiseless_channel():
    dmc = example1_channel(2)
    assert frame_activity_test(dmc, np.full(4, 1)) == "active"
    assert frame_activity_test(dmc, np.zeros(4, dtype=int)) == "silent"


@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_frame_statistic_bounded(kappa, seed):
    dmc = binary_symmetric_channel(0.2)
    y = np.random.default_rng(seed).integers(0, 2, size=kappa)
    s = frame_activity_statistic(dmc, y)
    assert -kappa - 1e-12 <= s <= kappa + 1e-12


def test_frame_statistic_rejects_bad_smoothing():
    with pytest.raises(DomainError):
        frame_activity_statistic(binary_symmetric_channel(0.2), [0], lambda_smooth=1.5)


def _brute_force(eps_hat, dmc, C_n, R_p, gamma, dt):
    budget = selection_budget(R_p, gamma, dt)
    best = None
    for t in enumerate_types(dmc.input_size, C_n):
        p = t.distribution
        cost = float(p @ eps_hat)
        if cost > budget + 1e-12:
            continue
        rate = max(mutual_information(p, dmc.transition) - dt, 0.0)
        rate = 0.0 if rate < 1e-13 else rate
        key = (rate, -cost)
        if best is None or rate > best[0][0] + 1e-12 or (
            abs(rate - best[0][0]) <= 1e-12 and cost < -best[0][1] - 1e-12
        ):
            best = (key, t)
    if best is None:
        return InputType.point_mass(dmc.input_size, 0, C_n)
    return best[1]


@st.composite
def selection_instances(draw):
    X = draw(st.integers(2, 4))
    Y = draw(st.integers(2, 4))
    raw = draw(arrays(float, (X, Y), elements=st.floats(0.0, 1.0))) + 0.05
    W = raw / raw.sum(axis=1, keepdims=True)
    if np.allclose(W, W[0]):
        W[1] = np.eye(Y)[0]
    eps = draw(arrays(float, X, elements=st.floats(0.0, 1.0)))
    C_n = draw(st.integers(1, 32 if X <= 3 else 12))
    R_p = draw(st.floats(0.0, 0.8))
    return Dmc(W), eps, C_n, R_p


@settings(max_examples=60)
@given(selection_instances())
def test_select_codebook_matches_brute_force(inst):
    dmc, eps, C_n, R_p = inst
    gamma, dt = 0.01, 0.05
    got = select_codebook(eps, C_n, R_p, gamma, dt, dmc)
    ref = _brute_force(eps, dmc, C_n, R_p, gamma, dt)
    rate = lambda t: max(mutual_information(t.distribution, dmc.transition) - dt, 0.0)
    assert rate(got) == pytest.approx(rate(ref), abs=1e-10)
    assert got.distribution @ eps == pytest.approx(ref.distribution @ eps, abs=1e-10)
    assert got.denominator == C_n


def test_select_codebook_examples():
    dmc = example1_channel(2)
    assert select_codebook([0, 0, 0.9], 1, 0.5, 0.01, 0.05, dmc).counts == (1, 0, 0)
    assert select_codebook([1, 0, 0], 1, 0.5, 0.01, 0.05, dmc).counts == (0, 1, 0)
    assert select_codebook([0, 1, 1], 4, 0.5, 0.01, 0.05, dmc).counts == (3, 1, 0)


def test_select_codebook_prefers_cheap_half_symbols():
    dmc = example3_channel(8)
    eps = np.array([0.0] + [1.0] * 8 + [0.25] * 4)
    t = select_codebook(eps, 4, 0.5, 0.01, 0.05, dmc)
    p = t.distribution
    assert p @ eps <= selection_budget(0.5, 0.01, 0.05) + 1e-12
    assert mutual_information(p, dmc.transition) > math.log(2)


def test_select_codebook_shape_check():
    with pytest.raises(ConfigurationError):
        select_codebook([0.1], 2, 0.5, 0.01, 0.05, example1_channel(2))


@given(st.integers(0, 300), st.data())
def test_bit_helpers_round_trip(width, data):
    value = data.draw(st.integers(0, (1 << width) - 1 if width else 0))
    bits = int_to_bits(value, width)
    assert bits.size == width
    assert bits_to_int(bits) == value


@given(arrays(np.uint8, (5, 17), elements=st.integers(0, 1)))
def test_vector_bit_helpers(bits):
    np.testing.assert_array_equal(ints_to_bits(bits_to_ints(bits, 17), 17), bits)

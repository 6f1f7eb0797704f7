import inspect
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arqradio.channel import builtin_scenario, example1_channel
from arqradio.errors import ConfigurationError, DomainError, PlanningError
from arqradio.protocols import (
    AdaptiveEncoder,
    FixedEncoder,
    ProtocolParams,
    ThresholdEncoder,
    _Gate,
    adaptive_decoder,
    adaptive_encoder_step,
    default_params,
    fixed_decoder,
    fixed_encoder_step,
    iroot,
    threshold_decoder,
    threshold_encoder_step,
)


def _msg(bits, seed=0):
    return np.random.default_rng(seed).integers(0, 2, size=bits, dtype=np.uint8)


def test_default_schedule_examples():
    p = default_params(2**24, 0.5, 0.2, 0.15)
    assert (p.K, p.kappa, p.C_n) == (8, 2, 1)
    p = default_params(10**6, 0.5, 0.2, 0.15)
    assert (p.K, p.kappa) == (5, 2)
    assert p.gamma == pytest.approx(0.15 / 4)


@given(st.integers(1, 10**30), st.integers(1, 40))
def test_iroot_exact(n, k):
    r = iroot(n, k)
    assert r**k <= n < (r + 1) ** k


def test_parameter_validation():
    with pytest.raises(ConfigurationError, match="kappa"):
        ProtocolParams(n=100, K=10, kappa=10, gamma=0.01, delta_tilde=0.1, R_p=0.5)
    with pytest.raises(ConfigurationError, match="gamma"):
        ProtocolParams(n=100, K=10, kappa=2, gamma=0.06, delta_tilde=0.1, R_p=0.5)
    with pytest.raises(ConfigurationError, match="rule"):
        ProtocolParams(n=100, K=10, kappa=2, gamma=0.01, delta_tilde=0.1, R_p=0.5, rule="other")
    with pytest.raises(DomainError):
        default_params(10**6, 0.5, 0.2, 0.15, gamma=0.2)
    p = ProtocolParams(n=100, K=10, kappa=2, gamma=0.04, delta_tilde=0.1, R_p=0.5)
    with pytest.raises(DomainError):
        p.check_slack(0.05)


@given(
    R_p=st.fractions(0, Fraction(9, 10), max_denominator=20),
    gamma=st.fractions(Fraction(1, 1000), Fraction(1, 20), max_denominator=1000),
    K=st.integers(2, 40),
    rule=st.sampled_from(["budget", "surplus"]),
    frame=st.integers(0, 200),
    data=st.data(),
)
def test_run_length_is_sound(R_p, gamma, K, rule, frame, data):
    params = ProtocolParams(n=10**6, K=K, kappa=1, gamma=float(gamma), delta_tilde=0.2,
                            R_p=float(R_p), rule=rule)
    gate = _Gate(params)
    i = frame * K
    delivered = data.draw(st.integers(0, i))
    active = gate.active(delivered, i)
    run = gate.run_length(delivered, i)
    assert run >= 1
    for f in range(1, min(run, 30)):
        # the ARQ path most likely to flip the role
        worst = delivered if active else delivered + f * K
        assert gate.active(worst, i + f * K) == active


def _drive_steps(enc, step, arqs):
    xs, a_prev = [], None
    for a in arqs:
        xs.append(step(enc, a_prev))
        a_prev = a
    return np.array(xs)


def _drive_frames(enc, arqs, K):
    xs, i = [], 0
    while i < arqs.size:
        _, run = enc.plan()
        frames = min(run, (arqs.size - i) // K)
        x, role, phase = enc.emit(frames)
        assert x.size == role.size == phase.size == frames * K
        enc.observe(arqs[i : i + x.size])
        xs.append(x)
        i += x.size
    return np.concatenate(xs)


@pytest.mark.parametrize("cls,step", [(FixedEncoder, fixed_encoder_step),
                                      (AdaptiveEncoder, adaptive_encoder_step)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_step_api_matches_frame_api(cls, step, seed):
    dmc = example1_channel(2)
    params = ProtocolParams(n=6000, K=30, kappa=3, gamma=0.01, delta_tilde=0.05, R_p=0.4,
                            C_n=2, seed=seed)
    arqs = (np.random.default_rng(seed).random(6000) < 0.5).astype(np.uint8)
    msg = _msg(12_000, seed)
    a = _drive_steps(cls(params, dmc, msg), step, arqs)
    b = _drive_frames(cls(params, dmc, msg), arqs, params.K)
    np.testing.assert_array_equal(a, b)


def test_frame_roles_replay_from_arqs():
    dmc = example1_channel(3)
    params = ProtocolParams(n=5000, K=50, kappa=5, gamma=0.01, delta_tilde=0.05, R_p=0.5)
    arqs = (np.random.default_rng(9).random(5000) < 0.6).astype(np.uint8)
    runs = [_drive_frames(FixedEncoder(params, dmc, _msg(9000, s)), arqs, 50) for s in (1, 2)]
    # messages differ, roles agree
    roles = [(r.reshape(-1, 50)[:, 0] != 0) for r in runs]
    np.testing.assert_array_equal(roles[0], roles[1])


def test_frame_roles_only_change_at_boundaries():
    dmc = example1_channel(3)
    params = ProtocolParams(n=4000, K=40, kappa=4, gamma=0.01, delta_tilde=0.05, R_p=0.5)
    arqs = (np.random.default_rng(3).random(4000) < 0.7).astype(np.uint8)
    x = _drive_frames(FixedEncoder(params, dmc, _msg(8000)), arqs, 40).reshape(-1, 40)
    prefix_active = (x[:, :4] != 0).all(axis=1)
    silent = (x == 0).all(axis=1)
    assert np.all(prefix_active | silent)
    assert prefix_active.any() and silent.any()


@given(st.lists(st.integers(0, 1), min_size=1, max_size=300),
       st.fractions(Fraction(1, 10), Fraction(9, 10), max_denominator=30))
def test_threshold_encoder_transmits_iff_surplus_nonnegative(arqs, R_p):
    enc = ThresholdEncoder(R_p, example1_channel(4), _msg(1000))
    S = Fraction(0)
    a_prev = None
    for a in arqs:
        x = threshold_encoder_step(enc, a_prev)
        if a_prev is not None:
            S += a_prev - R_p
        assert enc.S == S
        assert (x != 0) == (S >= 0)
        a_prev = a


def test_threshold_decoder_recovers_bits_on_noiseless_channel():
    dmc = example1_channel(4)
    msg = _msg(1000)
    enc = ThresholdEncoder(0.5, dmc, msg)
    xs = [threshold_encoder_step(enc, None if k == 0 else k % 2) for k in range(200)]
    bits = threshold_decoder(np.array(xs), dmc)
    assert bits.size == 2 * sum(x != 0 for x in xs)
    np.testing.assert_array_equal(bits, msg[: bits.size])


def test_fixed_decoder_recovers_fragments_noiselessly():
    dmc = example1_channel(3)
    # a large back-off keeps random-coding collisions negligible at this blocklength
    params = ProtocolParams(n=3000, K=20, kappa=4, gamma=0.01, delta_tilde=0.5, R_p=0.5)
    msg = _msg(6000)
    enc = FixedEncoder(params, dmc, msg)
    arqs = (np.random.default_rng(1).random(3000) < 0.8).astype(np.uint8)
    y = _drive_frames(enc, arqs, 20)
    state = fixed_decoder(y, params, dmc, genie=enc.sent, rng=np.random.default_rng(0))
    active = (y.reshape(-1, 20)[:, :4] != 0).all(axis=1)
    np.testing.assert_array_equal(state.verdicts, active)
    assert state.bits.size == enc.bits_committed > 0
    np.testing.assert_array_equal(state.bits, msg[: state.bits.size])


def test_adaptive_decoder_recovers_type_and_payload():
    dmc = example1_channel(2)
    params = ProtocolParams(n=6000, K=30, kappa=3, gamma=0.01, delta_tilde=0.5, R_p=0.1, C_n=2)
    msg = _msg(12_000)
    enc = AdaptiveEncoder(params, dmc, msg)
    arqs = (np.random.default_rng(2).random(6000) < 0.8).astype(np.uint8)
    y = _drive_frames(enc, arqs, 30)
    state = adaptive_decoder(y, params, dmc, genie=enc.sent, rng=np.random.default_rng(0))
    assert state.chosen_type == enc.chosen_type
    assert state.bits.size > 0
    np.testing.assert_array_equal(state.bits, msg[: state.bits.size])


def test_pilot_block_layout():
    dmc = example1_channel(2)
    params = ProtocolParams(n=1000, K=14, kappa=3, gamma=0.01, delta_tilde=0.05, R_p=0.4)
    enc = AdaptiveEncoder(params, dmc, _msg(10))
    assert enc.mu == 3
    np.testing.assert_array_equal(enc.pilot_block(), [0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 0])


def test_adaptive_encoder_refusals():
    dmc = example1_channel(3)
    with pytest.raises(ConfigurationError, match="pilot"):
        AdaptiveEncoder(ProtocolParams(n=100, K=5, kappa=2, gamma=0.01, delta_tilde=0.1, R_p=0.5),
                        dmc, _msg(10))
    with pytest.raises(PlanningError):
        AdaptiveEncoder(ProtocolParams(n=100, K=8, kappa=4, gamma=0.01, delta_tilde=0.1, R_p=0.5,
                                       C_n=10), dmc, _msg(10))


def test_decoders_read_only_channel_outputs():
    for fn in (fixed_decoder, adaptive_decoder, threshold_decoder):
        params = list(inspect.signature(fn).parameters)
        assert params[0] == "y_sequence"
        assert not any(p in ("a", "arqs", "a_sequence") for p in params)


def test_emit_past_run_refused():
    sc = builtin_scenario("example1:P=3,eps1=0.9")
    params = ProtocolParams(n=1000, K=10, kappa=2, gamma=0.01, delta_tilde=0.05, R_p=0.5)
    enc = FixedEncoder(params, sc.dmc, _msg(100))
    active, run = enc.plan()
    assert not active
    with pytest.raises(DomainError):
        enc.emit(run + 1)

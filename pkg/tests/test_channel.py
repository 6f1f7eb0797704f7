import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arqradio.channel import (
    AdversarialProfile,
    ConstantProfile,
    Dmc,
    PiecewiseProfile,
    PrimaryState,
    Scenario,
    as_fraction,
    binary_symmetric_channel,
    builtin_scenario,
    example1_channel,
    example2_channel,
    fig7_profile,
    load_scenario,
    sample_block,
    sample_step,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    step_primary,
    validate_scenario,
)
from arqradio.errors import ConfigurationError


def _scenario(eps_on=(0.9, 0.9, 0.9), eps_off=0.0, R_p=0.5, nu=0.2):
    return Scenario(example1_channel(len(eps_on)), ConstantProfile(eps_off, eps_on), R_p, nu)


def test_dmc_rejects_non_stochastic_rows():
    with pytest.raises(ConfigurationError, match="rows"):
        Dmc(np.array([[0.5, 0.4], [0.0, 1.0]]))


def test_dmc_rejects_channel_without_distinguishable_input():
    with pytest.raises(ConfigurationError, match="x_off"):
        Dmc(np.array([[0.5, 0.5], [0.5, 0.5]]))


def test_x_rep_is_first_distinguishable_input():
    w = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert Dmc(w).x_rep == 2


def test_noiseless_flag():
    assert example1_channel(3).is_noiseless
    assert not example2_channel(3).is_noiseless


def test_as_fraction_reads_decimal_form():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("3/7") == Fraction(3, 7)


@given(
    st.lists(st.integers(0, 1), min_size=1, max_size=200),
    st.fractions(min_value=0, max_value=1, max_denominator=50),
)
def test_surplus_is_exact(arqs, R_p):
    state = PrimaryState()
    for a in arqs:
        state = step_primary(state, a, R_p)
    assert state.S == sum(arqs) - len(arqs) * R_p
    assert state.packets_delivered <= state.transmissions == len(arqs)


def test_step_primary_rejects_bad_outcome():
    with pytest.raises(ConfigurationError):
        step_primary(PrimaryState(), 2, 0.5)


@given(st.integers(0, 2**32 - 1))
def test_sample_step_replays_identically(seed):
    sc = Scenario(example2_channel(3), ConstantProfile(0.1, (0.6, 0.7, 0.8)), 0.5, 0.2)

    def run():
        rng = np.random.default_rng(seed)
        return [sample_step(sc, x % 4, i + 1, rng) for i, x in enumerate(range(30))]

    assert run() == run()


def test_arq_frequency_matches_erasure_law():
    sc = _scenario(eps_on=(0.3, 0.6, 0.9), eps_off=0.1)
    rng_y, rng_a = np.random.default_rng(1), np.random.default_rng(2)
    N = 40_000
    for x, eps in enumerate((0.1, 0.3, 0.6, 0.9)):
        _, a = sample_block(sc, np.full(N, x), 1, rng_y, rng_a)
        assert abs(a.mean() - (1 - eps)) < 5 / np.sqrt(N)


def test_output_independent_of_arq_given_input():
    sc = Scenario(binary_symmetric_channel(0.3), ConstantProfile(0.2, (0.7,)), 0.3, 0.1)
    rng_y, rng_a = np.random.default_rng(3), np.random.default_rng(4)
    y, a = sample_block(sc, np.ones(50_000, dtype=np.uint8), 1, rng_y, rng_a)
    assert abs(np.corrcoef(y, a)[0, 1]) < 0.02


def test_piecewise_profile_switches_at_starts():
    prof = PiecewiseProfile(0.1, ((1, (0.6,)), (5, (0.9,))))
    got = prof.eps_block(np.array([1, 1, 1, 1, 1, 0]), 3)
    np.testing.assert_allclose(got, [0.6, 0.6, 0.9, 0.9, 0.9, 0.1])


def test_fig7_switch_at_square_root_of_horizon():
    prof = fig7_profile(3, 0.0, 10_000)
    assert prof.switch == 100
    assert prof.eps(1, 100) == 0.99
    assert prof.eps(1, 101) == pytest.approx(0.2)
    assert prof.eps(0, 50) == 0.0


def _profiles():
    yield ConstantProfile(0.1, (0.6, 0.9))
    yield PiecewiseProfile(0.1, ((1, (0.6, 0.9)), (10, (0.95, 0.7))))
    yield AdversarialProfile(eps_off=0.1, n_inputs=3, switch=7, high=0.99, low=0.3)


@pytest.mark.parametrize("profile", list(_profiles()), ids=lambda p: type(p).__name__)
def test_scenario_json_round_trip(profile, tmp_path):
    sc = Scenario(example1_channel(2), profile, 0.4, 0.2, name="rt")
    path = tmp_path / "sc.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back.dmc == sc.dmc
    assert back.R_p == sc.R_p and back.nu == sc.nu and back.name == "rt"
    x = np.array([0, 1, 2, 1, 2, 0, 1, 2, 1, 2, 1, 2])
    np.testing.assert_array_equal(back.profile.eps_block(x, 1), profile.eps_block(x, 1))
    assert json.loads(path.read_text())["schema"] == "arqradio.scenario/1"


@pytest.mark.parametrize("missing", ["transition", "eps_off", "schedule", "R_p", "nu"])
def test_missing_field_is_named(missing):
    d = scenario_to_dict(_scenario())
    del d[missing]
    with pytest.raises(ConfigurationError, match=missing):
        scenario_from_dict(d)


def test_unknown_schedule_kind_is_named():
    d = scenario_to_dict(_scenario())
    d["schedule"] = {"kind": "sinusoid"}
    with pytest.raises(ConfigurationError, match="schedule.kind"):
        scenario_from_dict(d)


def test_validation_tags():
    assert validate_scenario(_scenario()) == []
    tags = lambda sc: {v.split(":")[0] for v in validate_scenario(sc)}
    assert "eps-above-silent" in tags(_scenario(eps_on=(0.9, 0.05, 0.9), eps_off=0.1))
    assert "rate-slack" in tags(_scenario(R_p=0.85, nu=0.2))
    assert "eps-range" in tags(_scenario(eps_on=(1.5, 0.9, 0.9)))
    bad = Scenario(example1_channel(3), ConstantProfile(0.0, (0.9,)), 0.5, 0.2)
    assert "profile-size" in tags(bad)


def test_builtin_scenarios():
    sc = builtin_scenario("example1:P=3,eps0=0.1,eps1=0.9,rp=0.4")
    assert sc.dmc.input_size == 4 and sc.eps_off == 0.1 and sc.R_p == 0.4
    assert validate_scenario(sc) == []
    adv = builtin_scenario("example1:P=2,schedule=fig7,n=10000")
    assert isinstance(adv.profile, AdversarialProfile) and adv.profile.switch == 100
    with pytest.raises(ConfigurationError, match="unknown keys"):
        builtin_scenario("example2:bogus=1")
    with pytest.raises(ConfigurationError, match="unknown builtin"):
        builtin_scenario("example9")

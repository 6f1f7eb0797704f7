import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arqradio.channel import binary_symmetric_channel, example1_channel, example2_channel, example3_channel
from arqradio.errors import ConfigurationError, DomainError
from arqradio.rib import (
    binary_entropy,
    budget_sweep,
    continuity_bound,
    dual_bound,
    fixed_codebook_lower_bound,
    mutual_information,
    rib,
    rib_example1,
    rib_example2,
    rib_example3,
    unconstrained_capacity,
)

TOL = 1e-7


@st.composite
def channels(draw, max_x=5, max_y=5):
    nx = draw(st.integers(2, max_x))
    ny = draw(st.integers(2, max_y))
    raw = draw(arrays(float, (nx, ny), elements=st.floats(0.0, 1.0)))
    raw = raw + draw(st.floats(1e-3, 0.2))
    W = raw / raw.sum(axis=1, keepdims=True)
    eps = draw(arrays(float, nx, elements=st.floats(0.0, 1.0)))
    return W, eps


def test_capacity_of_known_channels():
    assert unconstrained_capacity(example1_channel(3))[0] == pytest.approx(math.log(4), abs=1e-9)
    p = 0.11
    c, law = unconstrained_capacity(binary_symmetric_channel(p))
    assert c == pytest.approx(math.log(2) - binary_entropy(p), abs=1e-9)
    np.testing.assert_allclose(law, [0.5, 0.5], atol=1e-6)


@pytest.mark.parametrize("P", [1, 2, 3, 8])
@pytest.mark.parametrize("eps0,eps1", [(0.0, 1.0), (0.05, 0.9), (0.1, 0.7)])
@pytest.mark.parametrize("R_p", [0.1, 0.4, 0.7])
def test_example1_closed_form(P, eps0, eps1, R_p):
    eps = np.array([eps0] + [eps1] * P)
    got = rib(example1_channel(P), eps, R_p).value
    assert got == pytest.approx(rib_example1(P, eps0, eps1, R_p), abs=1e-6)


@pytest.mark.parametrize("P", [2, 4, 8])
@pytest.mark.parametrize("R_p", [0.1, 0.5, 0.9])
def test_example2_closed_form(P, R_p):
    got = rib(example2_channel(P), np.array([0.0] + [1.0] * P), R_p).value
    assert got == pytest.approx(rib_example2(P, R_p), abs=1e-6)


@pytest.mark.parametrize("P,eh,R_p", [(4, 0.1, 0.5), (8, 0.1, 0.5), (8, 0.0, 0.3)])
def test_example3_closed_form_inside_region(P, eh, R_p):
    eps = np.array([0.0] + [1.0] * P + [eh] * (P // 2))
    got = rib(example3_channel(P), eps, R_p).value
    assert got == pytest.approx(rib_example3(P, R_p, eh), abs=1e-6)


def test_example3_closed_form_refuses_outside_region():
    with pytest.raises(DomainError):
        rib_example3(8, 0.8, 0.25)
    with pytest.raises(DomainError):
        rib_example3(2, 0.3, 0.25)


def test_infeasible_budget():
    r = rib(example1_channel(2), np.array([0.6, 0.9, 0.9]), 0.5)
    assert not r.feasible and r.value == 0.0


def test_budget_at_minimum_cost_uses_cheapest_inputs():
    r = rib(example1_channel(2), np.array([0.5, 0.5, 0.9]), 0.5)
    assert r.value == pytest.approx(math.log(2), abs=1e-8)


def test_rejects_wrong_cost_shape():
    with pytest.raises(ConfigurationError):
        rib(example1_channel(2), np.array([0.0, 1.0]), 0.5)


@given(channels(), st.floats(0.0, 1.0))
def test_solution_invariants(ch, R_p):
    W, eps = ch
    r = rib(W, eps, R_p)
    assume(r.feasible)
    assert r.value >= 0
    assert r.slack >= -1e-9
    assert r.optimizer.sum() == pytest.approx(1.0, abs=1e-12)
    assert mutual_information(r.optimizer, W) == pytest.approx(r.value, abs=1e-9)
    assert r.value <= unconstrained_capacity(W)[0] + TOL
    assert r.value <= dual_bound(W, eps, 1 - R_p, r.optimizer @ W) + TOL


@settings(max_examples=15)
@given(channels())
def test_monotone_and_concave_in_budget(ch):
    W, eps = ch
    lo = float(eps.min())
    lams = np.linspace(lo, 1.0, 5)
    vals = [rib(W, eps, 1 - lam).value for lam in lams]
    assert all(b >= a - TOL for a, b in zip(vals, vals[1:]))
    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            for rho in (0.25, 0.5, 0.75):
                mid = (1 - rho) * lams[i] + rho * lams[j]
                v = rib(W, eps, 1 - mid).value
                assert v >= (1 - rho) * vals[i] + rho * vals[j] - TOL


@given(channels(), st.sampled_from([0.01, 0.05, 0.1, 0.25]), st.floats(0.0, 0.75))
def test_budget_continuity(ch, delta, lam):
    W, eps = ch
    lam = max(lam, float(eps.min()))
    a = rib(W, eps, 1 - lam).value
    b = rib(W, eps, 1 - (lam + delta)).value
    assert -TOL <= b - a <= continuity_bound(delta, *W.shape) + TOL


@given(channels(), st.sampled_from([0.01, 0.05, 0.1, 0.25]), st.floats(0.2, 1.0), st.data())
def test_cost_perturbation(ch, delta, lam, data):
    W, eps = ch
    direction = data.draw(arrays(float, eps.size, elements=st.floats(-1, 1)))
    assume(np.abs(direction).sum() > 0)
    other = np.clip(eps + delta * direction / np.abs(direction).sum(), 0, 1)
    assert np.abs(other - eps).sum() <= delta + 1e-12
    a, b = rib(W, eps, 1 - lam), rib(W, other, 1 - lam)
    assume(a.feasible and b.feasible and lam >= max(eps.min(), other.min()) + delta)
    assert abs(a.value - b.value) <= continuity_bound(delta, *W.shape) + TOL


def test_continuity_bound_domain():
    with pytest.raises(DomainError):
        continuity_bound(0.3, 2, 2)


def test_budget_sweep_columns():
    rows = budget_sweep(example1_channel(3), [0.0, 0.9, 0.9, 0.9], [0.3, 0.5])
    assert set(rows[0]) == {"lambda", "R_p", "rib_nats", "rib_bits", "slack", "iterations", "feasible"}
    assert rows[0]["rib_bits"] == pytest.approx(rows[0]["rib_nats"] / math.log(2))
    assert rows[0]["lambda"] == pytest.approx(0.7)


def test_fixed_codebook_lower_bound():
    assert fixed_codebook_lower_bound(0.0, 0.5, math.log(4)) == pytest.approx(math.log(2))
    assert fixed_codebook_lower_bound(0.3, 0.9, 1.0) == 0.0

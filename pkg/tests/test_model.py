import numpy as np
import pytest
from hypothesis import given, strategies as st

from haptofv.model import (DomainError, ModelParams, State, TaxisVariant, diffusion_coefficient,
                           drift_velocity_coefficient, reaction_rhs, total_density)

P = ModelParams()
dens = st.floats(0.0, 10.0, allow_nan=False)
unit = st.floats(0.0, 1.0, allow_nan=False)


def test_table1_defaults():
    assert (P.alpha, P.beta, P.kappa_m, P.kappa_v, P.mu_p, P.mu_v, P.eta, P.lam) == \
        (0.01, 0.2, 0.1, 0.1, 0.3, 0.021, 1.75, 0.1)
    assert P.eps1 == 0.0
    assert P.taxis_variant is TaxisVariant.CONTINUOUS


def test_params_reject_negative():
    with pytest.raises(DomainError):
        ModelParams(alpha=-1.0)
    with pytest.raises(DomainError):
        ModelParams(eps1=-1e-3)
    with pytest.raises(ValueError):
        ModelParams(taxis_variant="bogus")
    assert ModelParams(taxis_variant="numerics").taxis_variant is TaxisVariant.NUMERICS


@pytest.mark.parametrize("m, p, expected", [(0.0, 0.0, 0.0), (0.5, 0.8, 1.3), (1.0, 0.0, 1.0)])
def test_total_density(m, p, expected):
    s = State([m, 0.0], [p, 0.0], [0.5, 0.5])
    assert total_density(s, 0) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(IndexError):
        total_density(s, 2)


def test_state_shape_check():
    with pytest.raises(ValueError):
        State(np.zeros(3), np.zeros(2), np.zeros(3))
    s = State.zeros(4)
    np.testing.assert_array_equal(s.c, 0.0)


@pytest.mark.parametrize("m, p, v, eps1, expected", [
    (0.0, 0.0, 1.0, 0.0, 0.0),
    (1.0, 0.0, 1.0, 0.0, 0.05),
    (1.0, 0.0, 0.0, 0.001, 0.001),
])
def test_diffusion_examples(m, p, v, eps1, expected):
    assert diffusion_coefficient(m, p, v, ModelParams(eps1=eps1)) == pytest.approx(expected, abs=1e-16)


@pytest.mark.parametrize("variant, m, p, v, expected", [
    ("continuous", 0.0, 0.0, 0.0, 0.1),
    ("continuous", 0.0, 0.0, 1.0, 0.025),
    ("numerics", 0.5, 0.5, 0.3, 0.025),
])
def test_drift_examples(variant, m, p, v, expected):
    prm = ModelParams(taxis_variant=variant)
    assert drift_velocity_coefficient(m, p, v, prm) == pytest.approx(expected, rel=1e-15)


def test_reaction_example():
    dm, dp, dv = reaction_rhs(0.5, 0.8, 0.9, P)
    assert dm == pytest.approx(0.139, abs=1e-12)
    assert dp == pytest.approx(-0.589, abs=1e-12)
    assert dv == pytest.approx(-0.04311, abs=1e-12)


@pytest.mark.parametrize("state", [(0.0, 0.0, 0.0), (0.0, 0.0, 1.0)])
def test_reaction_fixed_points(state):
    assert reaction_rhs(*state, P) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("fn", [diffusion_coefficient, drift_velocity_coefficient, reaction_rhs])
@pytest.mark.parametrize("bad", [(-0.1, 0.0, 0.5), (0.0, -0.1, 0.5), (0.1, 0.1, -0.1), (0.1, 0.1, 1.1)])
def test_domain_errors(fn, bad):
    with pytest.raises(DomainError):
        fn(*bad, P)


@given(dens, dens, unit, st.floats(0.0, 0.1))
def test_diffusion_range_and_degeneracy(m, p, v, eps1):
    prm = ModelParams(eps1=eps1)
    D = diffusion_coefficient(m, p, v, prm)
    assert eps1 <= D < prm.kappa_m + eps1
    assert diffusion_coefficient(m, p, 0.0, prm) == eps1
    assert diffusion_coefficient(0.0, 0.0, v, prm) == eps1


@given(dens, dens, unit, st.floats(0.0, 1.0))
def test_diffusion_monotone(m, p, v, dx):
    D = diffusion_coefficient(m, p, v, P)
    assert diffusion_coefficient(m + dx, p, v, P) >= D
    assert diffusion_coefficient(m, p + dx, v, P) >= D
    assert diffusion_coefficient(m, p, min(1.0, v + dx), P) >= D


def test_diffusion_saturates():
    vals = [diffusion_coefficient(m, 0.0, 1.0, P) for m in (10.0, 100.0, 1000.0)]
    gaps = [P.kappa_m - d for d in vals]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 1e-3 * P.kappa_m


@given(dens, dens, unit)
def test_drift_range(m, p, v):
    for variant in TaxisVariant:
        V = drift_velocity_coefficient(m, p, v, ModelParams(taxis_variant=variant))
        assert 0 < V <= P.kappa_v


@given(unit, unit, unit)
def test_transition_terms_cancel(m, p, v):
    dm, dp, _ = reaction_rhs(m, p, v, P)
    growth = P.mu_p * p * (1 - (m + p) - P.eta * v)
    assert abs(dm + dp - growth) <= 1e-15


@given(dens, dens)
def test_tissue_interval_invariance(m, p):
    assert reaction_rhs(m, p, 0.0, P)[2] == 0.0
    assert reaction_rhs(m, p, 1.0, P)[2] <= 0.0

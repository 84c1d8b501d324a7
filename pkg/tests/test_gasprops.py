import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasleak import gasprops as gp

MEAN_P, MEAN_T, MEAN_SG = 1317.60, 90.71, 0.63


def beggs_brill_oracle(t, p):
    # written out independently at 30 significant digits
    mpmath.mp.dps = 30
    t, p = mpmath.mpf(t), mpmath.mpf(p)
    a = 1.39 * mpmath.sqrt(t - 0.92) - 0.36 * t - 0.101
    b = ((0.62 - 0.23 * t) * p + (0.066 / (t - 0.86) - 0.037) * p ** 2
         + 0.32 * p ** 6 / mpmath.power(10, 9 * (t - 1)))
    c = 0.132 - 0.32 * mpmath.log10(t)
    d = mpmath.power(10, 0.3106 - 0.49 * t + 0.1824 * t ** 2)
    return float(a + (1 - a) * mpmath.exp(-b) + c * mpmath.power(p, d))


def lge_oracle(t_r, mw, rho):
    mpmath.mp.dps = 30
    t_r, mw, rho = mpmath.mpf(t_r), mpmath.mpf(mw), mpmath.mpf(rho)
    k = (9.4 + 0.02 * mw) * t_r ** 1.5 / (209 + 19 * mw + t_r) / 10 ** 4
    x = 3.5 + 986 / t_r + 0.01 * mw
    y = 2.4 - 0.2 * x
    return float(k * mpmath.exp(x * (rho / 62.4) ** y))


def test_standing_pseudo_criticals_at_mean_gravity():
    t_pc, p_pc = gp.pseudo_critical(MEAN_SG)
    assert t_pc == pytest.approx(168 + 325 * 0.63 - 12.5 * 0.63 ** 2)
    assert p_pc == pytest.approx(677 + 15 * 0.63 - 37.5 * 0.63 ** 2)


def test_sutton_is_selectable_and_differs():
    assert gp.pseudo_critical(MEAN_SG, "sutton") != gp.pseudo_critical(MEAN_SG)
    with pytest.raises(ValueError):
        gp.pseudo_critical(MEAN_SG, "nope")


@pytest.mark.parametrize("sg", [0.55, 0.63, 1.0])
def test_boundary_gravities_give_finite_positive_properties(sg):
    props = gp.properties_at(MEAN_P, MEAN_T, sg)
    assert all(math.isfinite(v) and v > 0 for v in props.values())


@pytest.mark.parametrize("sg", [0.54, 1.01, float("nan")])
def test_gravity_outside_domain_is_rejected(sg):
    with pytest.raises(gp.GasPropertyDomainError):
        gp.pseudo_critical(sg)


@given(st.floats(1.05, 3.0), st.floats(0.0, 8.0))
def test_z_factor_matches_high_precision_oracle(t, p):
    assert gp.z_factor(gp.PseudoReduced(t, p)) == pytest.approx(beggs_brill_oracle(t, p), rel=1e-12)


def test_z_factor_at_zero_pressure_is_one():
    for t in (1.1, 1.5, 2.5):
        assert gp.z_factor(gp.PseudoReduced(t, 0.0)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("t", [0.92, 0.5, float("nan")])
def test_z_factor_rejects_low_reduced_temperature(t):
    with pytest.raises(gp.GasPropertyDomainError):
        gp.z_factor(gp.PseudoReduced(t, 1.0))


def test_z_factor_at_mean_conditions_frozen():
    # frozen from the mpmath oracle at the Table 4.1 mean operating point
    state = gp.GasState(MEAN_P, gp.fahrenheit_to_rankine(MEAN_T), MEAN_SG)
    pr = state.reduced()
    assert gp.z_factor(pr) == pytest.approx(beggs_brill_oracle(pr.t_pr, pr.p_pr), rel=1e-12)
    assert gp.z_factor(pr) == pytest.approx(0.82446, abs=5e-5)


@given(st.floats(400.0, 700.0), st.floats(16.0, 29.0), st.floats(0.01, 20.0))
def test_lge_viscosity_matches_oracle(t_r, mw, rho):
    assert gp.lge_viscosity(t_r, mw, rho) == pytest.approx(lge_oracle(t_r, mw, rho), rel=1e-10)


def test_viscosity_density_follows_real_gas_law():
    state = gp.GasState(MEAN_P, gp.fahrenheit_to_rankine(MEAN_T), MEAN_SG)
    z = gp.z_factor(state.reduced())
    expected = MEAN_P * 28.97 * MEAN_SG / (z * 10.732 * state.temperature)
    assert state.density == pytest.approx(expected, rel=1e-12)


def test_explicit_density_overrides_derivation():
    state = gp.GasState(MEAN_P, 550.0, MEAN_SG, density=3.0)
    assert state.density == 3.0
    assert gp.gas_viscosity(state) == pytest.approx(lge_oracle(550.0, 28.97 * MEAN_SG, 3.0))


@pytest.mark.parametrize("kwargs", [dict(pressure=0.0), dict(pressure=-5.0), dict(temperature=0.0)])
def test_state_rejects_nonpositive_inputs(kwargs):
    base = dict(pressure=MEAN_P, temperature=550.0, specific_gravity=MEAN_SG)
    with pytest.raises(gp.GasPropertyDomainError):
        gp.GasState(**{**base, **kwargs})


@given(st.floats(100.0, 3000.0), st.floats(40.0, 160.0))
def test_viscosity_rises_with_pressure(p, t_f):
    lo = gp.properties_at(p, t_f, MEAN_SG)["viscosity"]
    hi = gp.properties_at(p * 1.1, t_f, MEAN_SG)["viscosity"]
    assert hi > lo


def test_fahrenheit_to_rankine():
    assert gp.fahrenheit_to_rankine(32.0) == pytest.approx(491.67)

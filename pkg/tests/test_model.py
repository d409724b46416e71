import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from optosync.errors import (EmptyTrajectory, MissingParameter, NonPositiveInput, NonPositiveRate,
                             ParameterError)
from optosync.integrate import Trajectory
from optosync.model import (HZ_TO_RAD_PER_NS, Cavity, ModelParams, RateInput, Resonator, Setup,
                            derive_zpf, rate_labels, regime_from_means, to_angular,
                            validate_regime)
from optosync.scenarios import preset

HBAR = 1.054571817e-34


def fig3_inputs(**over):
    return [RateInput(k, v) for k, v in dict(preset("fig3b").rates, **over).items()]


def test_omega_conversion():
    p = to_angular(fig3_inputs(), "CS_A")
    assert p.resonators["m"].omega == pytest.approx(2.17398, abs=5e-6)


def test_zero_detuning_accepted():
    p = to_angular(fig3_inputs(delta_1=0.0), Setup.CS_A)
    assert p.cavities["1"].delta == 0.0


def test_damping_ratio():
    p = to_angular(fig3_inputs(), "CS_A")
    assert p.cavities["1"].gamma / p.resonators["m"].damping == pytest.approx(85.714, abs=1e-3)


def test_missing_parameter():
    rates = dict(preset("fig3b").rates)
    del rates["omega_m"]
    with pytest.raises(MissingParameter, match="omega_m"):
        to_angular([RateInput(k, v) for k, v in rates.items()], "CS_A")


@pytest.mark.parametrize("label", ["gamma_1", "omega_m", "Gamma_m"])
def test_nonpositive_rate(label):
    with pytest.raises(NonPositiveRate):
        to_angular(fig3_inputs(**{label: 0.0}), "CS_A")


def test_negative_input_rejected():
    with pytest.raises(ParameterError):
        RateInput("gamma_1", -1.0)
    with pytest.raises(ParameterError):
        RateInput("gamma_1", float("nan"))


def test_negative_detuning_in_params_allowed():
    p = to_angular(fig3_inputs(), "CS_A")
    q = p.with_cavity("1", delta=-0.3)
    assert q.cavities["1"].delta == -0.3


def test_cs_b_requires_equal_couplings():
    p = preset("fig5b").params
    with pytest.raises(ParameterError, match="k_1 == k_2"):
        p.with_couplings(k_1=0.1)


def test_mode_sets_are_enforced():
    p = preset("fig7").params
    with pytest.raises(ParameterError):
        ModelParams(Setup.PS_A, dict(p.cavities, x=Cavity(0, 1, 0, 0)), p.resonators)
    with pytest.raises(MissingParameter):
        ModelParams(Setup.PS_A, {"s": p.cavities["s"]}, p.resonators)


def test_rate_labels():
    assert rate_labels("PS_B")[-5:] == ["omega_s", "Gamma_s", "omega_w", "Gamma_w", "k"]
    assert "k_1" in rate_labels("CS_B") and "k_2" in rate_labels("CS_B")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e3, 1e11), min_size=14, max_size=14))
def test_round_trip_to_hz(values):
    labels = rate_labels("CS_A")
    inputs = dict(zip(labels, values))
    back = to_angular([RateInput(k, v) for k, v in inputs.items()], "CS_A").to_hz()
    for k, v in inputs.items():
        assert abs(back[k] - v) <= 1e-12 * v


# ------------------------------------------------------------------ zpf

def test_zpf_fig3_mass():
    x = derive_zpf(0.11e-18, 2 * math.pi * 0.346e9)
    assert x == pytest.approx(4.70e-13, rel=5e-3)


def test_zpf_unit_case():
    assert derive_zpf(1.0, 1.0) == pytest.approx(math.sqrt(HBAR / 2), rel=1e-12)


def test_zpf_mass_doubling():
    assert derive_zpf(2e-18, 1e9) / derive_zpf(1e-18, 1e9) == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("m, w", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_zpf_rejects_nonpositive(m, w):
    with pytest.raises(NonPositiveInput):
        derive_zpf(m, w)


@given(st.floats(1e-20, 1e3), st.floats(1e-3, 1e12), st.floats(1.01, 10))
def test_zpf_decreasing(m, w, f):
    assert derive_zpf(m * f, w) < derive_zpf(m, w)
    assert derive_zpf(m, w * f) < derive_zpf(m, w)


def test_spring_term_reduction_symbolic():
    """-K (x_j - x_s) on resonator j, with x = x_zpf u and K = hbar k / (x_s x_j),
    reduces to 2 omega_j k (u_s - r u_j) in u_j'' with r = x_j / x_s."""
    hbar, m, om, k, us, uj, r = sp.symbols("hbar m Omega k u_s u_j r", positive=True)
    xj = sp.sqrt(hbar / (2 * m * om))
    xs = xj / r
    K = hbar * k / (xs * xj)
    accel = -K * (xj * uj - xs * us) / (m * xj)
    assert sp.simplify(accel - 2 * om * k * (us - r * uj)) == 0
    # and the optical force hbar G |a|^2 / (m x_zpf), G = g / x_zpf, gives 2 omega g |a|^2
    g, a2 = sp.symbols("g a2", positive=True)
    assert sp.simplify(hbar * (g / xj) * a2 / (m * xj) - 2 * om * g * a2) == 0


# --------------------------------------------------------------- regime

def _traj(u, channels=("u",)):
    t = np.arange(len(u), dtype=float)
    return Trajectory(t, np.column_stack([u] * len(channels)), channels)


def test_regime_zero_detuning_infinite():
    p = preset("fig7").params.with_cavity("s", delta=0.0)
    rep = validate_regime(p, _traj(np.full(10, 3.0)))
    assert rep.ratios["gs_xbar/delta_s"] == math.inf
    assert rep.satisfied["gs_xbar/delta_s"]


def test_regime_no_motion():
    rep = validate_regime(preset("fig7").params, _traj(np.zeros(10)))
    assert all(v == 0.0 for v in rep.ratios.values())
    assert not any(rep.satisfied.values())


def test_regime_b_setup_channels():
    p = preset("fig9").params
    t = np.arange(5.0)
    tr = Trajectory(t, np.column_stack([np.full(5, 2.0), np.full(5, 4.0)]), ("u_s", "u_w"))
    rep = validate_regime(p, tr)
    assert rep.gs_xbar == pytest.approx(2 * p.cavities["s"].g)
    assert rep.gw_xbar == pytest.approx(4 * p.cavities["w"].g)


def test_regime_empty():
    with pytest.raises(EmptyTrajectory):
        validate_regime(preset("fig7").params, Trajectory(np.zeros(0), np.zeros((0, 1)), ("u",)))


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.1, 100), st.floats(1.0, 10))
def test_regime_monotone_in_threshold(us, uw, th, f):
    p = preset("fig7").params
    lo = regime_from_means(p, us, uw, th)
    hi = regime_from_means(p, us, uw, th * f)
    for k in lo.satisfied:
        assert not (hi.satisfied[k] and not lo.satisfied[k])
        assert lo.ratios[k] >= 0
        assert lo.satisfied[k] == (lo.ratios[k] > th)

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import rhs_complex
from optosync.dynamics import (LAYOUTS, RHS, build_model, make_state, rhs_cs_a, rhs_cs_b,
                               rhs_ps_a, rhs_ps_b, subsystem_channels)
from optosync.errors import LayoutMismatch
from optosync.integrate import IntegrationPlan, integrate
from optosync.model import Setup
from optosync.scenarios import preset

BASE = {"CS_A": "fig3b", "CS_B": "fig5b", "PS_A": "fig7", "PS_B": "fig9"}


def params(setup, **kw):
    p = preset(BASE[setup]).params
    return replace(p, **kw) if kw else p


def undriven(p):
    for name in p.cavities:
        p = p.with_cavity(name, eps=0.0)
    return p


@pytest.mark.parametrize("setup", list(BASE))
def test_origin_is_fixed_point_without_drive(setup):
    p = undriven(params(setup))
    dy = RHS[Setup(setup)](np.zeros(len(LAYOUTS[Setup(setup)])), p)
    assert np.all(dy == 0.0)


def test_strong_drive_only_term_at_origin():
    p = undriven(params("CS_A")).with_cavity("s", eps=1.7)
    dy = rhs_cs_a(np.zeros(8), p)
    assert dy[0] == 1.7
    assert np.all(dy[1:] == 0.0)


def test_cs_a_hand_evaluation():
    p = params("CS_A")
    y = make_state("CS_A", alpha={"s": 1.0}, mech={"m": (1.0, 0.0)})
    dy = rhs_cs_a(y, p)
    s, om = p.cavities["s"], p.resonators["m"].omega
    expected = -1j * s.delta - s.gamma / 2 - 1j * s.g + s.eps
    assert dy[0] == pytest.approx(expected.real, rel=1e-14)
    assert dy[1] == pytest.approx(expected.imag, rel=1e-14)
    assert dy[7] == pytest.approx(-om ** 2 + 2 * om * s.g, rel=1e-14)


def test_ps_a_hand_evaluation():
    # frozen from an exact symbolic evaluation of the canonical field
    y = make_state("PS_A", alpha={"s": 1.0, "w": 1.0}, mech={"m": (2.0, 0.0)})
    expected = [96.00707149370407, -2.400176787342602, 1.2189379495928399,
                -0.4800353574685204, 0.0, -6.010194296087376]
    np.testing.assert_allclose(rhs_ps_a(y, params("PS_A")), expected, rtol=1e-13)


def test_cs_b_equal_displacements_cancel_spring():
    p = params("CS_B")
    y = make_state("CS_B", mech={"s": (0.7, 0.0), "1": (0.7, 0.0), "2": (0.7, 0.0)})
    q = p.with_couplings(k_1=0.0, k_2=0.0)
    np.testing.assert_array_equal(rhs_cs_b(y, p), rhs_cs_b(y, q))


def test_cs_b_spring_pulls_toward_strong():
    p = undriven(params("CS_B"))
    y = make_state("CS_B", mech={"s": (1.0, 0.0)})
    dy = rhs_cs_b(y, p)
    k = p.couplings["k_1"]
    assert dy[7] == pytest.approx(2 * p.resonators["1"].omega * k, rel=1e-14)
    assert dy[11] == pytest.approx(2 * p.resonators["2"].omega * k, rel=1e-14)


def test_ps_b_spring_hand_evaluation():
    p = undriven(params("PS_B"))
    y = make_state("PS_B", mech={"s": (1.0, 0.0), "w": (-1.0, 0.0)})
    dy = rhs_ps_b(y, p)
    om, k = p.resonators["w"].omega, p.couplings["k"]
    assert dy[7] == pytest.approx(-om ** 2 * -1.0 + 4 * om * k, rel=1e-14)


def test_ps_a_weak_cavity_linear_relaxation():
    p = params("PS_A").with_cavity("w", delta=0.0)
    y = make_state("PS_A", alpha={"w": 0.3 - 0.2j})
    dy = rhs_ps_a(y, p)
    w = p.cavities["w"]
    expected = -0.5 * w.gamma * (0.3 - 0.2j) + w.eps
    assert dy[2] == pytest.approx(expected.real)
    assert dy[3] == pytest.approx(expected.imag)


states = {s: arrays(np.float64, len(LAYOUTS[Setup(s)]), elements=st.floats(-50, 50))
          for s in BASE}


@pytest.mark.parametrize("setup", list(BASE))
@pytest.mark.parametrize("backaction", [False, True])
def test_matches_independent_oracle(setup, backaction):
    p = params(setup, include_weak_backaction=backaction, zpf_ratio=1.3 if "B" in setup else 1.0)

    @settings(max_examples=40, deadline=None)
    @given(states[setup])
    def check(y):
        np.testing.assert_allclose(RHS[Setup(setup)](y, p), rhs_complex(setup, y, p),
                                   rtol=1e-12, atol=1e-9)
    check()


@pytest.mark.parametrize("setup", list(BASE))
def test_steady_state_of_linear_cavities(setup):
    p = params(setup)
    for name in p.cavities:
        p = p.with_cavity(name, g=0.0)
    if p.couplings:
        p = p.with_couplings(**{k: 0.0 for k in p.couplings})
    alpha = {m: c.eps / (1j * c.delta + c.gamma / 2) for m, c in p.cavities.items()}
    y = make_state(setup, alpha=alpha)
    dy = RHS[Setup(setup)](y, p)
    for m in p.cavities:
        i = LAYOUTS[Setup(setup)].index(f"re_alpha_{m}")
        assert abs(dy[i]) < 1e-12 * max(1.0, abs(p.cavities[m].eps))
        assert abs(dy[i + 1]) < 1e-12 * max(1.0, abs(p.cavities[m].eps))


def _weak_indices(setup):
    w = Setup(setup).weak_mode
    names = ["re_alpha_%s", "im_alpha_%s"] + (["u_%s", "v_%s"] if "B" in setup else [])
    if setup == "CS_B":
        return [LAYOUTS[Setup.CS_B].index(n % m) for m in ("1", "2") for n in names]
    if setup == "CS_A":
        return [LAYOUTS[Setup.CS_A].index(n % m) for m in ("1", "2") for n in names]
    return [LAYOUTS[Setup(setup)].index(n % w) for n in names]


@pytest.mark.parametrize("setup", list(BASE))
def test_strong_branch_ignores_weak_entries(setup):
    p = params(setup)
    rng = np.random.default_rng(1)
    y = rng.normal(size=len(LAYOUTS[Setup(setup)]))
    weak = _weak_indices(setup)
    # in the A setups the shared resonator counts as part of the strong branch
    strong = [i for i in range(len(y)) if i not in weak]
    z = y.copy()
    z[weak] += rng.normal(size=len(weak))
    f = RHS[Setup(setup)]
    np.testing.assert_array_equal(f(y, p)[strong], f(z, p)[strong])


@pytest.mark.parametrize("setup", ["CS_B", "PS_B"])
def test_zero_coupling_decouples_weak_branch(setup):
    p = params(setup)
    p = p.with_couplings(**{k: 0.0 for k in p.couplings})
    rng = np.random.default_rng(2)
    y = rng.normal(size=len(LAYOUTS[Setup(setup)]))
    weak = _weak_indices(setup)
    z = y.copy()
    z[:4] += rng.normal(size=4)
    f = RHS[Setup(setup)]
    np.testing.assert_array_equal(f(y, p)[weak], f(z, p)[weak])


def test_zero_g_decouples_weak_cavity_ps_a():
    p = params("PS_A").with_cavity("w", g=0.0)
    y = np.arange(6, dtype=float)
    z = y.copy()
    z[[0, 1, 4, 5]] += 3.0
    np.testing.assert_array_equal(rhs_ps_a(y, p)[2:4], rhs_ps_a(z, p)[2:4])


def test_backaction_adds_weak_force():
    p = params("PS_A")
    y = make_state("PS_A", alpha={"w": 2.0})
    off = rhs_ps_a(y, p)[5]
    on = rhs_ps_a(y, params("PS_A", include_weak_backaction=True))[5]
    om, g = p.resonators["m"].omega, p.cavities["w"].g
    assert on - off == pytest.approx(2 * om * g * 4.0)


def test_conservative_limit_under_rk4():
    p = params("CS_A")
    for m in p.cavities:
        p = p.with_cavity(m, gamma=1e-300, eps=0.0, g=0.0)
    p = p.with_resonator("m", damping=1e-300)
    model = build_model(p)
    y0 = make_state("CS_A", alpha={"s": 1.0, "1": 0.5j, "2": 0.2}, mech={"m": (1.0, 0.3)})
    tr = integrate(model, y0, IntegrationPlan(0.0, model.period, 1e-3, discard=0.0))
    y1 = tr.final_state
    om = p.resonators["m"].omega
    energy = lambda y: y[7] ** 2 + om ** 2 * y[6] ** 2
    assert abs(energy(y1) - energy(y0)) / energy(y0) < 1e-10
    for i in (0, 2, 4):
        assert abs(np.hypot(y1[i], y1[i + 1]) - np.hypot(y0[i], y0[i + 1])) < 1e-10


@pytest.mark.parametrize("f, n", [(rhs_cs_a, 7), (rhs_cs_b, 8), (rhs_ps_a, 8), (rhs_ps_b, 6)])
def test_layout_mismatch(f, n):
    setup = {rhs_cs_a: "CS_A", rhs_cs_b: "CS_B", rhs_ps_a: "PS_A", rhs_ps_b: "PS_B"}[f]
    with pytest.raises(LayoutMismatch):
        f(np.zeros(n), params(setup))


def test_wrong_setup_params():
    with pytest.raises(LayoutMismatch):
        rhs_cs_a(np.zeros(8), params("PS_B"))


def test_make_state_and_channels():
    y = make_state("CS_B", alpha={"2": 1 + 2j}, mech={"s": (3.0, 4.0)})
    lay = LAYOUTS[Setup.CS_B]
    assert y[lay.index("re_alpha_2")] == 1 and y[lay.index("im_alpha_2")] == 2
    assert y[lay.index("u_s")] == 3 and y[lay.index("v_s")] == 4
    assert subsystem_channels("CS_A", "1") == ("re_alpha_1", "im_alpha_1", "u", "v")
    assert subsystem_channels("PS_B", "w") == ("re_alpha_w", "im_alpha_w", "u_w", "v_w")
    with pytest.raises(LayoutMismatch):
        make_state("PS_A", alpha={"1": 1.0})


def test_model_metadata():
    m = build_model(params("PS_B"))
    assert m.dim == 8 and m.jitted
    assert m.period == pytest.approx(2 * np.pi / m.params[8])

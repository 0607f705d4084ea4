import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq, minimize_scalar

from srlaser.cumulant import jacobian, rhs_array, settle, uncorrelated_state
from srlaser.errors import NoCollectiveRegionError, ParameterError, SolverError
from srlaser.params import derive, dipole_relaxation, saturated_inversion, sr87_params
from srlaser.steady import (
    Branch,
    collective_growth_rate,
    critical_atom_number,
    inversion_polynomial,
    output_power,
    spin_spin_closed_form,
    stability,
    state_from_inversion,
    steady_exact,
    thresholds_empirical,
)

# Stationary points of the complex-form equations, solved symbolically with
# exact rational inputs (gamma=1/100, t2_inv=1, kappa=940000, rabi=37) and
# evaluated to 25 digits. Keys: (N, w).
FROZEN = {
    (10**6, 300.0): dict(d=0.20736857931024097, ci=3.213207466501819, s=0.08163231645385588, n=126.47731517081628),
    (10**6, 700.0): dict(d=0.48202055076225103, ci=4.899605327850225, s=0.12447584360618356, n=192.8568054579344),
    (10**6, 1200.0): dict(d=0.8253295948049323, ci=2.832246391055855, s=0.07195352813517428, n=111.4820387968794),
    (10**6, 0.005): dict(d=-0.3336005685404523, ci=5.41692987403311e-08, s=-3.318231403061272e-07, n=2.1321958014811177e-06),
    (10**6, 3000.0): dict(d=0.999991453606848, ci=7.620628270114923e-05, s=9.392401631756639e-07, n=0.0029996089999388526),
    (1, 300.0): dict(d=0.9999236301481951, ci=3.9347557297088354e-05, s=4.820199451040832e-06, n=1.5487868297790097e-09),
    (10**5, 100.0): dict(d=0.7003829772399505, ci=0.4046580871112507, s=0.1027975544080231, n=1.5928031088421568),
}


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_matches_symbolic_stationary_point(key):
    n_atoms, w = key
    want = FROZEN[key]
    st = steady_exact(sr87_params(pump=w, n_atoms=n_atoms)).state
    assert st.coherence_re == 0.0
    for name, got in (("d", st.inversion), ("ci", st.coherence_im), ("s", st.spin_spin), ("n", st.photons)):
        assert got == pytest.approx(want[name], rel=1e-9), name


def test_live_symbolic_oracle():
    sp = pytest.importorskip("sympy")
    d, cr, ci, s, n = sp.symbols("d cr ci s n", real=True)
    big_n, g, w, t2, k, om = 10**6, sp.Rational(1, 100), sp.Rational(450), 1, 940000, 37
    c = cr + sp.I * ci
    d0 = (w - g) / (w + g)
    eqs = [
        -(w + g) * (d - d0) + sp.I * om * (c - sp.conjugate(c)),
        -((w + g) / 2 + t2 + k / 2) * c + sp.I * om / 2 * (n * d + (d + 1) / 2 + (big_n - 1) * s),
        -(g + w + 2 * t2) * s + om * d / (2 * sp.I) * (c - sp.conjugate(c)),
        -k * n + big_n * om / (2 * sp.I) * (c - sp.conjugate(c)),
    ]
    real_eqs = []
    for e in eqs:
        e = sp.expand(e)
        real_eqs += [x for x in (sp.re(e), sp.im(e)) if x != 0]
    sols = sp.solve(real_eqs, [d, cr, ci, s, n], dict=True)
    physical = [
        {str(key): float(sp.re(sp.N(v, 30))) for key, v in sol.items()}
        for sol in sols
        if sp.re(sp.N(sol[n])) >= 0 and -1 <= sp.re(sp.N(sol[d])) <= 1
    ]
    assert len(physical) == 1
    st = steady_exact(sr87_params(pump=450.0)).state
    assert st.inversion == pytest.approx(physical[0]["d"], rel=1e-10)
    assert st.photons == pytest.approx(physical[0]["n"], rel=1e-10)
    assert st.spin_spin == pytest.approx(physical[0]["s"], rel=1e-10)


def test_residual_and_polynomial_consistency():
    p = sr87_params(pump=300.0)
    rep = steady_exact(p)
    assert rep.residual < 1e-10
    assert abs(np.polyval(inversion_polynomial(p), rep.state.inversion)) < 1e-12
    x = state_from_inversion(p, rep.state.inversion).to_array()
    assert np.allclose(x, rep.state.to_array(), rtol=1e-10)


def test_decoupled_limit():
    p = sr87_params(pump=300.0, rabi=0.0)
    rep = steady_exact(p)
    assert rep.state.to_array() == pytest.approx(uncorrelated_state(p).to_array())
    assert rep.power == 0.0
    tiny = steady_exact(sr87_params(pump=300.0, rabi=1e-6))
    assert tiny.state.inversion == pytest.approx(saturated_inversion(300.0, 0.01), rel=1e-9)
    assert tiny.power < 1e-20


def test_spin_spin_at_optimal_pump(paper):
    rep = steady_exact(paper)
    assert rep.state.spin_spin == pytest.approx(1 / 8, rel=0.05)
    assert rep.branch is Branch.COLLECTIVE and rep.stable


def test_power_at_optimal_pump_matches_closed_form(paper):
    rep = steady_exact(paper)
    assert rep.power == pytest.approx(derive(paper).p_max, rel=0.1)
    assert 1e-12 <= rep.power <= 1e-10


def test_far_above_upper_threshold_is_quenched(paper):
    p = paper.replace(pump=10 * derive(paper).w_max)
    rep = steady_exact(p)
    assert rep.branch is Branch.QUENCHED
    assert not rep.collective
    assert spin_spin_closed_form(p) < 0
    # The exact s stays seeded by spontaneous emission but is below one
    # atom's worth of correlation.
    assert abs(rep.state.spin_spin) < 1 / p.n_atoms


def test_below_threshold_branch():
    rep = steady_exact(sr87_params(pump=0.005))
    assert rep.branch is Branch.BELOW_THRESHOLD
    assert rep.state.spin_spin < 0


def test_below_threshold_photons_per_excited_atom():
    # Far below threshold the field is spontaneous emission: photons per
    # excited atom does not depend on w.
    ratios = []
    for w in (1e-6, 1e-5, 1e-4):
        st = steady_exact(sr87_params(pump=w)).state
        ratios.append(st.photons / ((1 + st.inversion) / 2))
    assert max(ratios) / min(ratios) < 1.1
    assert steady_exact(sr87_params(pump=0.005)).state.photons < 1e-5


def test_closed_form_values(paper):
    assert spin_spin_closed_form(paper) == pytest.approx(1 / 8, rel=0.01)
    lo, hi = thresholds_empirical(paper)
    assert spin_spin_closed_form(paper.replace(pump=hi)) == pytest.approx(0.0, abs=1e-12)
    assert spin_spin_closed_form(paper.replace(pump=0.9 * paper.gamma)) < 0
    with pytest.raises(ParameterError):
        spin_spin_closed_form(paper.replace(rabi=0.0))


def test_closed_form_formula(paper):
    p = paper.replace(pump=321.0)
    c = derive(p).cooperativity
    a = p.n_atoms * p.gamma * c
    d0 = saturated_inversion(p.pump, p.gamma)
    big_gamma = p.gamma + p.pump + 2 * p.t2_inv
    expected = (d0 * a - big_gamma) * (p.pump + p.gamma) / (2 * a * a)
    assert spin_spin_closed_form(p) == pytest.approx(expected, rel=1e-13)


def test_thresholds_paper(paper):
    lo, hi = thresholds_empirical(paper)
    assert lo == pytest.approx(paper.gamma, rel=0.1)
    assert hi == pytest.approx(derive(paper).w_max, rel=0.1)


def test_thresholds_below_critical_number(paper):
    with pytest.raises(NoCollectiveRegionError):
        thresholds_empirical(paper, n_atoms=1000)
    with pytest.raises(NoCollectiveRegionError):
        thresholds_empirical(paper.replace(rabi=0.0))


def test_thresholds_two_roots_at_twice_critical(paper):
    n2 = int(2 * critical_atom_number(paper))
    lo, hi = thresholds_empirical(paper, n_atoms=n2)
    assert hi > 2 * lo
    # discriminant of d0(w) A - Gamma(w) = 0 written as a quadratic in w
    g, t = paper.gamma, paper.t2_inv
    a = n2 * g * derive(paper).cooperativity
    coeffs = [-1.0, a - 2 * g - 2 * t, -g * a - g * g - 2 * t * g]
    roots = np.sort(np.roots(coeffs).real)
    assert np.allclose([lo, hi], roots, rtol=1e-9)


def test_critical_number_is_tangency(paper):
    c = derive(paper).cooperativity
    g, t = paper.gamma, paper.t2_inv

    def best_gain(a):
        res = minimize_scalar(
            lambda lw: -(saturated_inversion(math.exp(lw), g) * a - (g + math.exp(lw) + 2 * t)),
            bounds=(math.log(g), math.log(1e3)), method="bounded", options={"xatol": 1e-12},
        )
        return -res.fun

    a_c = brentq(best_gain, 1.0, 100.0, xtol=1e-13)
    assert critical_atom_number(paper) == pytest.approx(a_c / (g * c), rel=1e-8)
    n_c = critical_atom_number(paper)
    lo, hi = thresholds_empirical(paper, n_atoms=math.ceil(n_c))
    assert hi / lo < 1.1
    with pytest.raises(NoCollectiveRegionError):
        thresholds_empirical(paper, n_atoms=math.floor(n_c))


def test_decoupled_eigenvalues_exact():
    p = sr87_params(pump=300.0, rabi=0.0)
    eigs = np.sort(stability(p, uncorrelated_state(p)).real)
    big_gamma = dipole_relaxation(p)
    want = np.sort([-(p.pump + p.gamma), -(big_gamma + p.kappa) / 2, -(big_gamma + p.kappa) / 2,
                    -big_gamma, -p.kappa])
    assert np.array_equal(eigs, want)


def test_collective_state_is_stable_and_uncorrelated_state_is_not(paper):
    rep = steady_exact(paper)
    assert max(z.real for z in rep.jacobian_eigs) < 0
    assert collective_growth_rate(paper) > 0
    other = [r for r in np.roots(inversion_polynomial(paper)) if abs(r - rep.state.inversion) > 1e-9]
    for d in other:
        st = state_from_inversion(paper, float(d.real))
        assert st.photons < 0 or np.max(stability(paper, st).real) > 0


def _interior_grid():
    p = sr87_params()
    n_c = derive(p).n_crit
    cap = p.kappa / 1e3 - 2 * p.t2_inv - p.gamma  # keep kappa > 1e3 Gamma
    for n in np.geomspace(10 * n_c, 1e7, 10).astype(int):
        q = p.replace(n_atoms=int(n))
        lo, hi = thresholds_empirical(q)
        for w in np.geomspace(5 * lo, min(0.9 * hi, cap), 10):
            yield q.replace(pump=float(w))


def test_exact_matches_closed_form_inside_region():
    worst = 0.0
    for p in _interior_grid():
        exact = steady_exact(p).state.spin_spin
        worst = max(worst, abs(exact / spin_spin_closed_form(p) - 1))
    assert worst < 0.05


@pytest.mark.slow
def test_settle_matches_exact_on_grid():
    for p in list(_interior_grid())[::7]:
        state, _ = settle(p, tol=1e-9, t_max=2e3)
        want = steady_exact(p).state.to_array()
        live = want != 0
        assert np.allclose(state.to_array()[live], want[live], rtol=1e-6, atol=0), p


def _spin_sign_pump(p):
    """Pump at which the exact inversion, and with it the exact spin-spin
    correlation, crosses zero: (w - gamma)(Gamma + kappa) = rabi^2."""
    f = lambda w: (w - p.gamma) * (p.gamma + w + 2 * p.t2_inv + p.kappa) - p.rabi**2  # noqa: E731
    return brentq(f, p.gamma, 10 * p.gamma, xtol=1e-16)


@pytest.mark.parametrize("n_atoms", [10**4, 10**5, 10**6, 10**7])
def test_branch_consistency_straddling_thresholds(paper, n_atoms):
    q = paper.replace(n_atoms=n_atoms)
    lo, hi = thresholds_empirical(q)
    below = steady_exact(q.replace(pump=0.95 * lo))
    inside = [steady_exact(q.replace(pump=w)) for w in (1.05 * lo, math.sqrt(lo * hi), 0.95 * hi)]
    above = steady_exact(q.replace(pump=1.05 * hi))
    assert not below.collective and below.branch is Branch.BELOW_THRESHOLD
    for rep in inside:
        assert rep.collective and rep.branch is Branch.COLLECTIVE
    assert not above.collective and above.branch is Branch.QUENCHED
    # Exact spin-spin sign: positive across the interior. Just above the
    # upper threshold it stays positive but at the O(1/N) level set by
    # spontaneous emission, versus O(1) inside.
    w_s = _spin_sign_pump(q)
    for w in np.geomspace(1.05 * max(lo, w_s), 0.95 * hi, 7):
        assert steady_exact(q.replace(pump=w)).state.spin_spin > 0
    assert 0 < above.state.spin_spin * n_atoms < 50


@pytest.mark.parametrize("n_atoms", [10**4, 10**6, 10**7])
def test_exact_spin_spin_sign_change(paper, n_atoms):
    q = paper.replace(n_atoms=n_atoms)
    w_s = _spin_sign_pump(q)
    f = lambda w: steady_exact(q.replace(pump=w)).state.spin_spin  # noqa: E731
    assert brentq(f, 0.5 * q.gamma, 5 * q.gamma, xtol=1e-16) == pytest.approx(w_s, rel=1e-9)
    assert w_s == pytest.approx(q.gamma * (1 + derive(q).cooperativity), rel=1e-5)


def test_power_scales_as_n_squared():
    powers = []
    for n in (10**6, 10**7):
        p = sr87_params(n_atoms=n)
        powers.append(steady_exact(p).power)
    assert powers[1] / powers[0] == pytest.approx(100.0, rel=0.1)


def test_single_atom():
    p = sr87_params(pump=300.0, n_atoms=1)
    rep = steady_exact(p)
    assert rep.branch is not Branch.COLLECTIVE
    assert rep.state.photons > 0
    # no collective term: same answer whatever the spin-spin value
    x = rep.state.to_array()
    assert np.max(np.abs(rhs_array(x, p)) / np.maximum(np.abs(x), 1e-300)) < 1e-6


def test_detuned_input_rejected():
    with pytest.raises(ParameterError):
        steady_exact(sr87_params(pump=300.0, detuning=1.0))


def test_output_power():
    p = sr87_params()
    assert output_power(p, 0.0) == 0.0
    assert output_power(p, 2.0) == pytest.approx(2 * 1.054571817e-34 * p.omega_a * p.kappa)
    with pytest.raises(ParameterError):
        output_power(p, -1.0)


def test_report_json_has_units(paper):
    rep = steady_exact(paper)
    doc = json.loads(rep.to_json())
    assert doc["power"]["unit"] == "W"
    assert doc["photons"]["unit"] == "1"
    assert doc["branch"] == "collective"
    assert len(doc["jacobian_eigs"]["value"]) == 5
    assert rep.multistable is False


def test_jacobian_at_steady_is_consistent(paper):
    rep = steady_exact(paper)
    eigs = np.linalg.eigvals(jacobian(rep.state.to_array(), paper))
    assert np.allclose(np.sort_complex(eigs), np.sort_complex(np.array(rep.jacobian_eigs)))


@settings(max_examples=60, deadline=None)
@given(
    log_n=st.floats(0, 7.5),
    log_w=st.floats(-4, 5),
    log_t2=st.floats(-2, 2),
    log_kappa=st.floats(3, 7),
    coop=st.floats(1e-3, 2.0),
)
def test_steady_state_is_stable_physical_root(log_n, log_w, log_t2, log_kappa, coop):
    kappa = 10**log_kappa
    p = sr87_params(n_atoms=max(1, int(10**log_n)), pump=10**log_w, t2_inv=10**log_t2,
                    kappa=kappa, rabi=math.sqrt(coop * kappa * 0.01))
    try:
        rep = steady_exact(p)
    except SolverError as exc:
        # Only legitimate when the physical root has lost stability (the
        # cumulant dynamics then self-pulse instead of settling).
        physical = [d for d in exc.diagnostics if d["physical"]]
        assert physical and not any(d["stable"] for d in physical)
        st_ = state_from_inversion(p, physical[0]["inversion"])
        assert np.max(stability(p, st_).real) > 0
        return
    st_ = rep.state
    assert rep.stable and rep.residual < 1e-10
    assert -1 <= st_.inversion <= saturated_inversion(p.pump, p.gamma) + 1e-12
    assert st_.photons >= 0 and rep.power >= 0
    assert (rep.branch is Branch.COLLECTIVE) == rep.collective


def test_self_pulsing_outside_bad_cavity_regime():
    # Collective gain N gamma C above kappa: the physical stationary point
    # undergoes a Hopf bifurcation and the solver reports it.
    p = sr87_params(n_atoms=10**5, pump=1.0, t2_inv=1.0, kappa=1e3, rabi=math.sqrt(2 * 1e3 * 0.01))
    with pytest.raises(SolverError) as info:
        steady_exact(p)
    (phys,) = [d for d in info.value.diagnostics if d["physical"]]
    eigs = stability(p, state_from_inversion(p, phys["inversion"]))
    top = eigs[np.argmax(eigs.real)]
    assert top.real > 0 and abs(top.imag) > 0

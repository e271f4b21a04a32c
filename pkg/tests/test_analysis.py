"""Observables: scans, derivatives, order parameters, fits, scaling,
wave-function maps and degeneracy clustering."""

import numpy as np
import pytest

from esqpt_lab import analysis, eigen, fock, semiclassics as sc
from esqpt_lab.errors import DomainError, FitError, NoEsqptError
from esqpt_lab.models import ModelSpec


# ---------------------------------------------------------------------------
# scans and derivatives
# ---------------------------------------------------------------------------

def test_single_point_scan_equals_eig_all():
    spec = ModelSpec.vibron(40, 0, 0.55)
    table = analysis.spectrum_scan(spec, [0.55])
    assert np.allclose(table.energies[0], eigen.solve_block(spec).eigenvalues)


def test_scan_reproduces_symmetry_limits():
    """xi = 0 row is the occupancy ladder; xi = 1 row is quadratic in k."""
    n = 100
    table = analysis.spectrum_scan(ModelSpec.vibron(n, 0, 0.0),
                                   [0.0, 0.2, 0.5, 1.0])
    assert np.allclose(table.energies[0], np.arange(0, n + 1, 2) / n)
    k = np.arange(51.0)
    w = n - 2 * k
    want = (-w * (w + 1) + n * (n + 1)) / n**2 - 1.0 * (n + 1) / n
    assert np.allclose(np.sort(want), table.energies[3], atol=1e-10)


def test_scan_lipkin_parity_interleaving():
    """Even and odd blocks interleave at xi = 0 and pair up beyond xi_c."""
    n = 10
    even = analysis.spectrum_scan(ModelSpec.lipkin(n, 0, 0.0), [0.0, 0.6])
    odd = analysis.spectrum_scan(ModelSpec.lipkin(n, 1, 0.0), [0.0, 0.6])
    merged0 = np.sort(np.concatenate([even.energies[0], odd.energies[0]]))
    assert np.allclose(merged0, np.arange(n + 1) / n)
    # below the barrier the lowest even/odd pair is quasi-degenerate
    gap_pair = abs(even.energies[1][0] - odd.energies[1][0])
    spacing = even.energies[1][1] - even.energies[1][0]
    assert gap_pair < 1e-2 * spacing


def test_xi_derivatives_constant_row():
    spec = ModelSpec.vibron(10, 0, 0.5)
    grid = np.linspace(0.4, 0.6, 21)
    table = analysis.ScanTable(spec, grid, np.ones((21, 6)), {})
    d1, d2 = analysis.xi_derivatives(table, 3)
    assert np.allclose(d1, 0.0) and np.allclose(d2, 0.0)


def test_xi_derivatives_dip_and_divergent_inflection():
    """At k/N = 0.2 the slope dips toward zero (deeper with N) while the
    curvature spikes and changes sign near xi = 0.5."""
    grid = np.arange(0.40, 0.601, 0.005)
    ratios = {}
    for n in (300, 1000):
        table = analysis.spectrum_scan(ModelSpec.vibron(n, 0, 0.5), grid)
        d1, d2 = analysis.xi_derivatives(table, n // 5)
        mid = np.argmin(np.abs(d1))
        assert abs(grid[mid] - 0.5) < 0.02
        ratios[n] = abs(d1[mid]) / abs(d1[0])
    assert ratios[1000] < ratios[300] < 0.75
    imax = np.argmax(np.abs(d2[2:-2])) + 2
    assert abs(grid[imax] - 0.5) < 0.03
    assert d2[imax - 3] * d2[min(imax + 3, len(d2) - 1)] < 0


def test_xi_derivatives_grid_guards():
    spec = ModelSpec.vibron(10, 0, 0.5)
    with pytest.raises(DomainError):
        analysis.xi_derivatives(analysis.ScanTable(spec, [0.1, 0.2, 0.3],
                                                   np.ones((3, 6)), {}), 0)
    with pytest.warns(UserWarning):
        table = analysis.ScanTable(spec, np.linspace(0.1, 0.9, 5),
                                   np.ones((5, 6)), {})
        analysis.xi_derivatives(table, 0)


def test_feynman_hellmann_closure():
    """dE/dxi == (E - <N_b>/N)/xi to 1e-6 relative, vector route vs slope."""
    n = 100
    occ = np.arange(0, n + 1, 2, dtype=float)
    for xi in (0.3, 0.5, 0.8):
        spec = ModelSpec.vibron(n, 0, xi)
        blk = eigen.solve_block(spec, want_vectors=True)
        nb = (blk.eigenvectors**2 * occ[:, None]).sum(axis=0)
        d1 = analysis.level_xi_derivative(spec, dxi=1e-4, richardson=True)
        lhs = d1
        rhs = (blk.eigenvalues - nb / n) / xi
        scale = np.maximum.reduce([np.abs(blk.eigenvalues), np.abs(nb / n),
                                   np.abs(xi * d1), np.full(blk.dim, 1e-12)])
        assert (np.abs(lhs - rhs) / scale).max() < 1e-6


# ---------------------------------------------------------------------------
# gaps and order parameters
# ---------------------------------------------------------------------------

def test_gap_profile_xi0_constant():
    mids, nd = analysis.gap_profile(ModelSpec.vibron(100, 0, 0.0))
    assert np.allclose(nd, 2.0)


def test_gap_profile_dip_location():
    mids, nd = analysis.gap_profile(ModelSpec.vibron(1000, 0, 0.5))
    assert abs(mids[np.argmin(nd)]) < 0.02


def test_gap_profile_so3_limit_closed_form():
    n = 100
    mids, nd = analysis.gap_profile(ModelSpec.vibron(n, 0, 1.0))
    k = np.arange(n // 2)
    assert np.allclose(nd, (4.0 * (n - 2 * k) - 2.0) / n, atol=1e-9)
    assert np.all(np.diff(nd) < 0)  # no interior dip


def test_order_parameter_xi0_exact():
    occ = analysis.order_parameter(ModelSpec.vibron(60, 0, 0.0))
    assert np.allclose(occ, np.arange(0, 61, 2), atol=1e-12)


def test_order_parameter_routes_agree():
    for xi in (0.3, 0.5, 0.8):
        spec = ModelSpec.vibron(100, 0, xi)
        a = analysis.order_parameter(spec)
        b = analysis.order_parameter_fh(spec, dxi=1e-4)
        assert np.abs((a - b) / np.maximum(np.abs(a), 1e-6)).max() < 1e-6


def test_order_parameter_dip_sharpens():
    """<N_b>/N dips near k_c, deeper at larger N."""
    dips = {}
    for n in (100, 1000):
        spec = ModelSpec.vibron(n, 0, 0.5)
        occ = analysis.order_parameter(spec) / n
        kc = analysis.critical_index(spec)
        k_min = int(np.argmin(occ))
        assert abs(k_min - kc) <= 2
        dips[n] = occ[k_min]
    assert dips[1000] < dips[100]


def test_order_parameter_fh_requires_positive_xi():
    with pytest.raises(DomainError):
        analysis.order_parameter_fh(ModelSpec.vibron(20, 0, 0.0))


# ---------------------------------------------------------------------------
# critical index
# ---------------------------------------------------------------------------

def test_critical_index_location():
    kc = analysis.critical_index(ModelSpec.vibron(1000, 0, 0.5))
    assert kc == pytest.approx(196.4, abs=1.0)
    assert not float(kc).is_integer()


def test_critical_index_no_barrier():
    with pytest.raises(NoEsqptError):
        analysis.critical_index(ModelSpec.vibron(100, 0, 0.15))


def test_critical_index_so3_limit():
    kc = analysis.critical_index(ModelSpec.vibron(1000, 0, 1.0))
    assert kc / 1000 == pytest.approx(0.5, abs=2e-3)


# ---------------------------------------------------------------------------
# asymptotic fit
# ---------------------------------------------------------------------------

def test_fit_alpha_value():
    fit = analysis.fit_asymptotics(ModelSpec.vibron(1000, 0, 0.5))
    assert fit.window == (5, 20)
    assert fit.alpha == pytest.approx(2.49, abs=0.1)
    assert fit.hbar_omega == pytest.approx(np.sqrt(0.75) / 1000, rel=1e-12)


def test_fit_round_trip():
    """Synthetic levels from the Lambert law return (alpha*, k_c*) to 1e-6."""
    n, xi = 1000, 0.5
    Xi = sc.barrier_curvature(xi)
    truth = sc.AsymptoticFit(k_c=200.5, alpha=2.1, hbar_omega=np.sqrt(Xi) / n,
                             Xi=Xi)
    ks = np.arange(150, 251)
    es = np.array([sc.esqpt_energy_estimate(truth, n, xi, k) for k in ks])
    blk = eigen.SpectrumBlock(ModelSpec.vibron(n, 0, xi), None, es)
    fit = analysis.fit_asymptotics(blk, kmin=5, kmax=30)
    assert fit.k_c + 150 == pytest.approx(200.5, abs=1e-9)
    assert fit.alpha == pytest.approx(2.1, abs=1e-6)
    per_side = analysis.fit_asymptotics(blk, kmin=5, kmax=30, share_alpha=False)
    assert per_side.alpha_below == pytest.approx(2.1, abs=1e-6)
    assert per_side.alpha_above == pytest.approx(2.1, abs=1e-6)


def test_fit_window_guard():
    with pytest.raises(FitError):
        analysis.fit_asymptotics(ModelSpec.vibron(60, 0, 0.5), kmin=5, kmax=5)


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

def test_scaling_exponent_exact_inverse():
    s, err = analysis.scaling_exponent([100, 200, 400, 800],
                                       [2e-2, 1e-2, 5e-3, 2.5e-3])
    assert s == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(DomainError):
        analysis.scaling_exponent([100, 200, 400, 800], [1, -1, 1, 1])
    with pytest.raises(FitError):
        analysis.scaling_exponent([100, 200], [1, 2])


def test_scaling_pair_convergence():
    """|N Delta(0.5) - N Delta(0.7)| at dk = 5 shrinks monotonically."""
    recs = analysis.scaling_study(ModelSpec.vibron(100, 0, 0.5), [0.5, 0.7],
                                  [10**3, 10**4, 10**5], dk=5.0)
    nd = {(r.xi, r.n_particles): r.n_delta for r in recs}
    diffs = [abs(nd[(0.5, n)] - nd[(0.7, n)]) for n in (10**3, 10**4, 10**5)]
    assert diffs[0] > diffs[1] > diffs[2]
    # pair members share one calibrated alpha and the same companion curves
    alphas = {r.alpha for r in recs}
    assert len(alphas) == 1
    for r in recs:
        assert r.n_delta_semiclassical == pytest.approx(r.n_delta, rel=0.08)


def test_rescale_spec_reparities():
    spec = ModelSpec.vibron(100, 3, 0.5)
    out = analysis.rescale_spec(spec, 101, 0.4)
    assert out.v1 == (101 - 3) % 2 and out.xi == 0.4
    ferm = ModelSpec.fermionic_pairing(100, 50, 50, 0, 0, 0.5)
    out = analysis.rescale_spec(ferm, 1000, 0.5)
    assert out.omega1 == 500 and out.omega2 == 500


# ---------------------------------------------------------------------------
# wave functions
# ---------------------------------------------------------------------------

def test_wavefunction_map_identity_at_xi0():
    p = analysis.wavefunction_map(ModelSpec.vibron(100, 0, 0.0))
    assert np.allclose(p, np.eye(51), atol=1e-12)


def test_wavefunction_rows_are_probabilities():
    p = analysis.wavefunction_map(ModelSpec.vibron(300, 0, 0.5))
    assert np.all(p >= 0)
    assert np.abs(p.sum(axis=1) - 1.0).max() < 1e-12


def test_wavefunction_structure_across_the_crossing():
    """Near k_c the state concentrates at low occupancy; above, the bimodal
    peaks' midpoint climbs roughly linearly with k."""
    n = 1000
    spec = ModelSpec.vibron(n, 0, 0.5)
    p = analysis.wavefunction_map(spec)
    occ = np.arange(0, n + 1, 2)
    kc = int(round(analysis.critical_index(spec)))
    row = p[kc]
    assert occ[np.argmax(row)] <= 0.05 * n
    mids = []
    ks = list(range(kc + 60, 440, 60))
    for k in ks:
        row = p[k].copy()
        first = int(np.argmax(row))
        row[max(first - 20, 0):first + 20] = 0.0
        second = int(np.argmax(row))
        mids.append(0.5 * (occ[first] + occ[second]))
    slope, _ = np.polyfit(ks, mids, 1)
    fit = np.polyval([slope, np.mean(mids) - slope * np.mean(ks)], ks)
    assert np.corrcoef(mids, fit)[0, 1] > 0.99
    assert slope > 0


def test_so3_mirror_defect_matches_small_n_oracle():
    """Reflection symmetry of the xi = 1 map about N_b/N = 1/2 is checked
    against the dense construction; it holds only approximately."""
    n = 10
    spec = ModelSpec.vibron(n, 0, 1.0)
    p = analysis.wavefunction_map(spec)
    defect_tri = np.abs(p - p[:, ::-1]).max()
    h = fock.dense_transitional_block(spec)
    w, v = np.linalg.eigh(h)
    pd = (v**2).T
    defect_dense = np.abs(pd - pd[:, ::-1]).max()
    assert defect_tri == pytest.approx(defect_dense, abs=1e-12)
    # measured: the mirror symmetry is approximate at finite N, not exact
    # (defect ~ 0.28 at N = 10)
    assert 0.05 < defect_tri < 0.5


# ---------------------------------------------------------------------------
# degeneracy tables
# ---------------------------------------------------------------------------

def test_degeneracy_rearrangement_vibron():
    span = 0.84
    clusters = analysis.degeneracy_scan(
        lambda l: ModelSpec.vibron(25, l, 0.6), range(6), width=0.008 * span)
    below = [c for c in clusters if c.energy_mean < -0.05 and c.size > 1]
    above = [c for c in clusters if c.energy_mean > 0.25 and c.size > 1]
    assert len(below) >= 3
    for c in below:
        labs = sorted(c.labels)
        assert labs == list(range(labs[0], labs[-1] + 1))  # consecutive l
    assert below[0].labels == (0, 1, 2, 3, 4, 5)
    assert len(above) >= 2
    for c in above:
        assert len({l % 2 for l in c.labels}) == 1  # like parity only


def test_degeneracy_lipkin_doublets():
    e0 = eigen.solve_block(ModelSpec.lipkin(100, 0, 0.5)).eigenvalues
    e1 = eigen.solve_block(ModelSpec.lipkin(100, 1, 0.5)).eigenvalues
    splitting = abs(e1[0] - e0[0])
    local = e0[1] - e0[0]
    assert splitting < 1e-3 * local


def test_degeneracy_uniform_without_barrier():
    clusters = analysis.degeneracy_scan(
        lambda l: ModelSpec.vibron(25, l, 0.1), range(3))
    comps = {tuple(sorted(c.labels)) for c in clusters if c.size > 1}
    assert len(comps) <= 1


# ---------------------------------------------------------------------------
# cross-cutting invariants
# ---------------------------------------------------------------------------

def test_second_difference_changes_sign_once():
    e = eigen.solve_block(ModelSpec.vibron(1000, 0, 0.5)).eigenvalues
    d2 = np.diff(e, 2)
    signs = np.sign(d2[np.abs(d2) > 1e-12])
    flips = int(np.sum(np.abs(np.diff(signs)) > 0))
    assert flips == 1


def test_gap_dip_suppressed_by_angular_momentum():
    minima = []
    for l in (0, 10, 25):
        _, nd = analysis.gap_profile(ModelSpec.vibron(100, l, 0.5))
        minima.append(nd.min())
    assert minima[0] < minima[1] < minima[2]


def test_horizontal_and_vertical_crossings_agree():
    """The xi at which the k/N = 0.2 level shows its curvature singularity
    matches the xi whose spectrum crosses zero at that same k."""
    n = 1000
    grid = np.arange(0.42, 0.581, 0.004)
    table = analysis.spectrum_scan(ModelSpec.vibron(n, 0, 0.5), grid)
    _, d2 = analysis.xi_derivatives(table, 200)
    i = np.argmax(np.abs(d2[2:-2])) + 2
    # locate the sign change of the curvature around its spike
    lo = max(i - 4, 0)
    hi = min(i + 4, len(grid) - 1)
    seg = d2[lo:hi + 1]
    flip = np.nonzero(np.diff(np.sign(seg)))[0]
    assert flip.size >= 1
    xi_cex = grid[lo + flip[0]]
    assert xi_cex == pytest.approx(0.5, abs=0.02)

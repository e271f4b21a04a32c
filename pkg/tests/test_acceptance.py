"""Acceptance gate: every top-level quantitative claim at its stated
tolerance, one pass/fail line per criterion (run with ``pytest -s`` to see
the lines as they complete)."""

import time

import numpy as np
import pytest

from esqpt_lab import (analysis, eigen, fock, models, semiclassics as sc)
from esqpt_lab.errors import OutOfSpectrumError
from esqpt_lab.models import ModelSpec


def report(num, text, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:>3}: {status}  {text}  [{detail}]")
    return ok


# ---------------------------------------------------------------------------
# 1. ground-state critical coupling
# ---------------------------------------------------------------------------

def test_criterion_01_ground_state_qpt_location():
    t0 = time.time()
    n = 2000
    xis = np.arange(0.10, 0.30 + 1e-12, 0.002)
    e0 = []
    for x in xis:
        op = models.build_transitional_hamiltonian(ModelSpec.vibron(n, 0, x))
        e0.append(eigen.eig_indices(op, 0, 0)[0])
    d2 = np.abs(np.diff(np.array(e0), 2))
    xc = xis[1 + int(np.argmax(d2))]
    elapsed = time.time() - t0
    ok = abs(xc - 0.20) <= 0.01 and elapsed < 60.0
    assert report(1, "ground-state QPT at xi = 0.20 +- 0.01, under 1 min",
                  ok, f"xi_c = {xc:.4f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. critical-point spectrum exponent
# ---------------------------------------------------------------------------

def test_criterion_02_critical_spectrum_exponent():
    n = 2000
    e = eigen.solve_block(ModelSpec.vibron(n, 0, 0.2)).eigenvalues
    ks = np.arange(5, n // 10 + 1)
    # excitation energies: the zero of the spectrum at the critical coupling
    # is the ground level up to its O(1/N^(4/3)) offset
    p = np.polyfit(np.log(ks / n), np.log(e[ks] - e[0]), 1)[0]
    ok = abs(p - 4.0 / 3.0) <= 0.05
    assert report(2, "E_k ~ (k/N)^(4/3) at xi = 0.2 within 0.05",
                  ok, f"p = {p:.4f}")


# ---------------------------------------------------------------------------
# 3. gap scaling exponents
# ---------------------------------------------------------------------------

def test_criterion_03_gap_scaling_exponents():
    t0 = time.time()
    ns = [100, 200, 400, 800, 1600, 3200]
    gs_gap = []
    mid_gap = []
    for n in ns:
        op = models.build_transitional_hamiltonian(ModelSpec.vibron(n, 0, 0.2))
        v = eigen.eig_indices(op, 0, 1)
        gs_gap.append(v[1] - v[0])
        op = models.build_transitional_hamiltonian(ModelSpec.vibron(n, 0, 0.5))
        j = eigen.sturm_count(op, -0.2)
        v = eigen.eig_indices(op, j, j + 1)
        mid_gap.append(v[1] - v[0])
    s_crit, _ = analysis.scaling_exponent(ns, gs_gap)
    s_away, _ = analysis.scaling_exponent(ns, mid_gap)
    elapsed = time.time() - t0
    ok1 = abs(s_crit + 4.0 / 3.0) <= 0.05
    ok2 = abs(s_away + 1.0) <= 0.03
    ok = ok1 and ok2 and elapsed < 300.0
    assert report(3, "gap scaling -4/3 at xi_c, -1 away, under 5 min", ok,
                  f"slopes {s_crit:.4f} / {s_away:.4f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4. critical energy and index
# ---------------------------------------------------------------------------

def test_criterion_04_esqpt_critical_energy():
    spec = ModelSpec.vibron(1000, 0, 0.5)
    blk = eigen.solve_block(spec)
    mids, nd = analysis.gap_profile(blk)
    e_dip = mids[int(np.argmin(nd))]
    kc = analysis.critical_index(blk)
    ok = abs(e_dip) < 0.02 and abs(kc / 1000 - 0.20) <= 0.01
    assert report(4, "gap minimum at |E| < 0.02 and k_c/N = 0.20 +- 0.01", ok,
                  f"E_dip = {e_dip:+.4f}, k_c/N = {kc / 1000:.4f}")


# ---------------------------------------------------------------------------
# 5 & 6. asymptotic coefficient and scaling convergence
# ---------------------------------------------------------------------------

_FIG7C_XI = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
_PAIR_ALPHA = {0.3: 1.24, 0.9: 1.24, 0.4: 1.92, 0.8: 1.92,
               0.5: 2.24, 0.7: 2.24, 0.6: 2.35}


@pytest.fixture(scope="module")
def scaling_records():
    template = ModelSpec.vibron(100, 0, 0.5)
    return analysis.scaling_study(template, _FIG7C_XI,
                                  [10**2, 10**3, 10**4, 10**5, 10**6], dk=5.0)


def test_criterion_05_alpha_recovery(scaling_records):
    fit = analysis.fit_asymptotics(ModelSpec.vibron(1000, 0, 0.5))
    ok1 = abs(fit.alpha - 2.49) <= 0.10
    alphas = {r.xi: r.alpha for r in scaling_records}
    devs = {x: alphas[x] - _PAIR_ALPHA[x] for x in _FIG7C_XI}
    ok2 = all(abs(d) <= 0.15 for d in devs.values())
    detail = (f"alpha(N=1000) = {fit.alpha:.3f}; pair alphas "
              + ", ".join(f"{x}:{alphas[x]:.2f}" for x in (0.3, 0.4, 0.5, 0.6)))
    assert report(5, "alpha = 2.49 +- 0.10 and pair values within 0.15",
                  ok1 and ok2, detail)


def test_criterion_06_scaling_convergence(scaling_records):
    t0 = time.time()
    nd = {(r.xi, r.n_particles): r.n_delta for r in scaling_records}
    mono = {}
    for a, b in ((0.3, 0.9), (0.4, 0.8), (0.5, 0.7)):
        diffs = [abs(nd[(a, n)] - nd[(b, n)]) for n in (10**3, 10**4, 10**5)]
        mono[(a, b)] = diffs[0] > diffs[1] > diffs[2]
    by_xi = {r.xi: r for r in scaling_records if r.n_particles == 10**6}
    ratio_ok = True
    for x, r in by_xi.items():
        ratio = r.n_delta_log_asymptote / r.n_delta_semiclassical
        ratio_ok &= abs(ratio - 1.0) <= 0.25
    elapsed = time.time() - t0
    ok = all(mono.values()) and ratio_ok and elapsed < 600.0
    detail = ("monotone " + ", ".join(f"{k}:{'y' if v else 'N'}"
                                      for k, v in mono.items())
              + f"; log-asymptote within 25%: {ratio_ok}")
    assert report(6, "pairwise gap differences strictly decreasing; "
                  "log asymptote within 25% of the W law", ok, detail)


# ---------------------------------------------------------------------------
# 7. cross-model universality
# ---------------------------------------------------------------------------

def test_criterion_07_cross_model_universality():
    specs = {
        "lipkin": ModelSpec.lipkin(100, 0, 0.5),
        "vibron": ModelSpec.vibron(100, 0, 0.5),
        "bosonic": ModelSpec.bosonic_pairing(100, 1, 1, 0, 0, 0.5),
        "fermionic": ModelSpec.fermionic_pairing(100, 50, 50, 0, 0, 0.5),
    }
    dips = {}
    for name, spec in specs.items():
        mids, nd = analysis.gap_profile(spec)
        dips[name] = mids[int(np.argmin(nd))]
    ok = all(abs(e) < 0.05 for e in dips.values())
    assert report(7, "gap minimum at |E| < 0.05 in all four families", ok,
                  ", ".join(f"{k}:{v:+.4f}" for k, v in dips.items()))


# ---------------------------------------------------------------------------
# 8. representation equivalences
# ---------------------------------------------------------------------------

def test_criterion_08_equivalence_oracle():
    t0 = time.time()
    worst = 0.0
    for n in (10, 25, 51, 100, 200):
        for l in range(0, 11):
            if l > n:
                continue
            for xi in (0.1, 0.5, 0.9):
                ef = eigen.eig_all(
                    models.build_vibron_fock_hamiltonian(n, l, xi)).eigenvalues
                twin = ModelSpec.vibron(n, l, xi, diagonal_shift=False)
                ep = eigen.eig_all(
                    models.build_transitional_hamiltonian(twin)).eigenvalues
                worst = max(worst, float(np.ptp(ep - ef)))
    residual = max(fock.verify_operator_identity(n, L)
                   for n, L in ((2, 0), (4, 1), (6, 1), (6, 2)))
    elapsed = time.time() - t0
    ok = worst < 1e-10 and residual < 1e-12
    assert report(8, "vibron Fock == pairing + const (1e-10); Casimir "
                  "identity residual < 1e-12", ok,
                  f"const spread {worst:.1e}, residual {residual:.1e}, "
                  f"{elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 9. semiclassics consistency
# ---------------------------------------------------------------------------

def test_criterion_09_wkb_consistency():
    t0 = time.time()
    n, xi = 1000, 0.5
    exact = eigen.solve_block(ModelSpec.vibron(n, 0, xi)).eigenvalues
    sys_ = sc.ClassicalSystem(xi=xi, v=0, n=2, N=n)
    worst = 0.0
    skipped = 0
    for k, ek in enumerate(exact):
        if abs(ek) <= 0.05:
            continue
        try:
            worst = max(worst, abs(sc.wkb_level(sys_, k) - ek))
        except OutOfSpectrumError:
            skipped += 1  # topmost level above the first-order action ceiling
    es = -np.logspace(-2, -5, 25)
    taus = np.array([sc.action_energy_derivative(sys_, e) for e in es])
    coef = np.polyfit(np.log(-es), taus, 1)
    resid = np.abs(np.polyval(coef, np.log(-es)) - taus) / taus
    elapsed = time.time() - t0
    ok = worst <= 5e-3 and skipped <= 1 and resid.max() < 0.02
    assert report(9, "WKB levels within 5e-3; period log-divergent "
                  "(linear-in-log residual < 2%)", ok,
                  f"max |dE| = {worst:.2e}, skipped {skipped}, "
                  f"fit residual {resid.max():.2%}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 10. Lambert W correctness
# ---------------------------------------------------------------------------

def test_criterion_10_lambert_w():
    xs_m = -np.logspace(np.log10(1 / np.e) - 1e-9, -300, 10**4)
    wm = sc.lambert_w("minus_one", xs_m)
    err_m = np.abs(wm * np.exp(wm) - xs_m) / np.maximum(np.abs(xs_m), 1e-300)
    xs_p = np.logspace(-300, 300, 10**4)
    wp = sc.lambert_w("principal", xs_p)
    err_p = np.abs(wp * np.exp(wp) - xs_p) / np.maximum(np.abs(xs_p), 1e-300)
    w01 = sc.lambert_w("minus_one", -0.1)
    ok = (err_m.max() <= 1e-12 and err_p.max() <= 1e-12
          and abs(w01 + 3.577152) <= 1e-6)
    assert report(10, "round trip <= 1e-12 over 1e4 points per branch; "
                  "W-1(-0.1) = -3.577152 +- 1e-6", ok,
                  f"err {err_m.max():.1e}/{err_p.max():.1e}, "
                  f"W-1(-0.1) = {w01:.7f}")


# ---------------------------------------------------------------------------
# 11. degeneracy rearrangement
# ---------------------------------------------------------------------------

def test_criterion_11_degeneracy_rearrangement():
    clusters = analysis.degeneracy_scan(
        lambda l: ModelSpec.vibron(25, l, 0.6), range(6), width=0.008 * 0.84)
    below = [c for c in clusters if c.energy_mean < -0.05 and c.size > 1]
    above = [c for c in clusters if c.energy_mean > 0.25 and c.size > 1]
    ok_below = (len(below) >= 3
                and all(sorted(c.labels)
                        == list(range(min(c.labels), max(c.labels) + 1))
                        for c in below)
                and any(set(c.labels) == set(range(6)) for c in below))
    ok_above = (len(above) >= 1
                and all(len({l % 2 for l in c.labels}) == 1 for c in above))
    e0 = eigen.solve_block(ModelSpec.lipkin(100, 0, 0.5)).eigenvalues
    e1 = eigen.solve_block(ModelSpec.lipkin(100, 1, 0.5)).eigenvalues
    ratio = abs(e1[0] - e0[0]) / (e0[1] - e0[0])
    ok = ok_below and ok_above and ratio < 1e-3
    assert report(11, "all-l multiplets below, like-parity above; doublet "
                  "splitting < 1e-3 of local spacing", ok,
                  f"below {len(below)} all-l, above {len(above)} like-parity, "
                  f"splitting ratio {ratio:.1e}")


# ---------------------------------------------------------------------------
# 12. Feynman-Hellmann closure
# ---------------------------------------------------------------------------

def test_criterion_12_feynman_hellmann_closure():
    n = 100
    occ = np.arange(0, n + 1, 2, dtype=float)
    worst = 0.0
    for xi in (0.3, 0.5, 0.8):
        spec = ModelSpec.vibron(n, 0, xi)
        blk = eigen.solve_block(spec, want_vectors=True)
        nb = (blk.eigenvectors**2 * occ[:, None]).sum(axis=0)
        d1 = analysis.level_xi_derivative(spec, dxi=1e-4, richardson=True)
        rhs = (blk.eigenvalues - nb / n) / xi
        scale = np.maximum.reduce([np.abs(blk.eigenvalues), np.abs(nb / n),
                                   np.abs(xi * d1), np.full(blk.dim, 1e-12)])
        worst = max(worst, float((np.abs(d1 - rhs) / scale).max()))
    ok = worst < 1e-6
    assert report(12, "relative closure defect below 1e-6 at dxi = 1e-4", ok,
                  f"max defect {worst:.1e}")

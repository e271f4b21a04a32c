"""Spectral observables: scans, derivatives, gaps, order parameters,
critical indices, asymptotic fits, finite-size scaling, wave-function maps
and degeneracy tables.

Functions accept either a :class:`~esqpt_lab.models.ModelSpec` (solved on
demand) or a precomputed :class:`~esqpt_lab.eigen.SpectrumBlock`.  Grid
drivers fan out over a small thread pool (LAPACK and the jitted kernels run
outside the GIL); the worker count is capped by the ``ESQPT_THREADS``
environment variable and results are always merged in grid order.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from . import eigen, semiclassics
from .errors import DomainError, FitError, NoEsqptError
from .models import ModelSpec
from .semiclassics import AsymptoticFit, barrier_curvature

BlockLike = Union[ModelSpec, eigen.SpectrumBlock]


def thread_count():
    env = os.environ.get("ESQPT_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _pmap(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def _as_block(obj: BlockLike, want_vectors=False) -> eigen.SpectrumBlock:
    if isinstance(obj, eigen.SpectrumBlock):
        if want_vectors and obj.eigenvectors is None:
            if obj.spec is None:
                raise DomainError("eigenvectors required but not stored")
            return eigen.solve_block(obj.spec, want_vectors=True)
        return obj
    return eigen.solve_block(obj, want_vectors=want_vectors)


# ---------------------------------------------------------------------------
# scans and derivatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanTable:
    """Energies on a control-parameter grid: ``energies[i, k]`` is level k at
    ``xi_grid[i]``.  Rows are ascending in k by construction."""

    template: ModelSpec
    xi_grid: np.ndarray
    energies: np.ndarray
    meta: dict

    def __post_init__(self):
        g = np.asarray(self.xi_grid, dtype=float)
        if len(g) == 0:
            raise DomainError("empty grid")
        if np.any(np.diff(g) <= 0):
            raise DomainError("xi grid must be strictly increasing")
        object.__setattr__(self, "xi_grid", g)


def spectrum_scan(template: ModelSpec, xi_grid) -> ScanTable:
    """Full block spectra over a parameter grid (one row per grid point)."""
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    rows = _pmap(lambda x: eigen.solve_block(template.with_xi(float(x))).eigenvalues,
                 xi_grid)
    energies = np.vstack(rows)
    meta = {
        "family": template.family,
        "n_particles": template.n_particles,
        "block": template.block_label(),
        "solver": "eig_all",
        "backend": "lapack",
    }
    return ScanTable(template, xi_grid, energies, meta)


def xi_derivatives(scan: ScanTable, k) -> Tuple[np.ndarray, np.ndarray]:
    """(dE_k/dxi, d2E_k/dxi2) on the scan grid by central differences.

    O(h^2) in the interior, one-sided at the endpoints.  Grids coarser than
    0.01 trigger a warning.
    """
    g = scan.xi_grid
    if len(g) < 5:
        raise DomainError("need at least 5 grid points")
    h = g[1] - g[0]
    if not np.allclose(np.diff(g), h, rtol=1e-8, atol=1e-12):
        raise DomainError("grid must be uniform")
    if h > 0.01 + 1e-12:
        warnings.warn(f"xi grid step {h:.3g} > 0.01: derivative accuracy degraded",
                      stacklevel=2)
    e = scan.energies[:, k]
    d1 = np.gradient(e, g, edge_order=2)
    d2 = np.empty_like(e)
    d2[1:-1] = (e[2:] - 2 * e[1:-1] + e[:-2]) / h**2
    d2[0] = (2 * e[0] - 5 * e[1] + 4 * e[2] - e[3]) / h**2
    d2[-1] = (2 * e[-1] - 5 * e[-2] + 4 * e[-3] - e[-4]) / h**2
    return d1, d2


def level_xi_derivative(spec: ModelSpec, dxi=1e-3, richardson=True):
    """dE_k/dxi for every level of one block by centered differencing.

    With ``richardson`` the two-step extrapolation raises the truncation
    order to O(dxi^4), which matters near the critical energy where the
    level curvature blows up.
    """
    if not (0.0 < dxi < 0.1):
        raise DomainError("need 0 < dxi < 0.1")

    def ev(x):
        return eigen.solve_block(spec.with_xi(x)).eigenvalues

    xi = spec.xi
    if xi - dxi < 0.0 or xi + dxi > 1.0:
        raise DomainError("xi too close to the interval ends for the stencil")
    d1 = (ev(xi + dxi) - ev(xi - dxi)) / (2 * dxi)
    if not richardson:
        return d1
    d2 = (ev(xi + dxi / 2) - ev(xi - dxi / 2)) / dxi
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------------------
# gaps, order parameters, critical index
# ---------------------------------------------------------------------------

def gap_profile(block: BlockLike) -> Tuple[np.ndarray, np.ndarray]:
    """(midpoint energies, scaled gaps N*Delta) along one block spectrum."""
    blk = _as_block(block)
    if blk.dim < 2:
        raise DomainError("need at least two levels for a gap profile")
    e = blk.eigenvalues
    n = blk.spec.n_particles if blk.spec is not None else 1
    return 0.5 * (e[1:] + e[:-1]), n * np.diff(e)


def order_parameter(block: BlockLike) -> np.ndarray:
    """Occupancy expectation <N_2>_k per level, from eigenvectors."""
    blk = _as_block(block, want_vectors=True)
    occ = blk.basis.occupancies.astype(float)
    return (blk.eigenvectors**2 * occ[:, None]).sum(axis=0)


def order_parameter_fh(spec: ModelSpec, dxi=1e-3, richardson=True) -> np.ndarray:
    """<N_2>_k from the energy slope: N [E_k - xi dE_k/dxi].

    Independent of the eigenvector route; requires xi > 0.  The relation is
    unchanged by the diagonal alignment shift (linear in xi).
    """
    if spec.xi <= 0.0:
        raise DomainError("the slope route needs xi > 0")
    e = eigen.solve_block(spec).eigenvalues
    d1 = level_xi_derivative(spec, dxi=dxi, richardson=richardson)
    return spec.n_particles * (e - spec.xi * d1)


def critical_index(block: BlockLike) -> float:
    """Noninteger index k_c where the spectrum crosses E = 0.

    Linear interpolation between the bracketing eigenvalues.  Raises
    :class:`NoEsqptError` when no interior crossing exists: without a
    barrier (xi <= 1/5) at most the ground level sits below zero, and only
    by its O(1/N) offset against the aligned barrier top, which does not
    constitute an excited-state crossing.
    """
    blk = _as_block(block)
    e = blk.eigenvalues
    i0 = int(np.searchsorted(e, 0.0))
    if i0 < 2:
        raise NoEsqptError(
            "no excited level below the critical energy: no excited-state "
            "crossing in this block (barrierless regime)")
    if i0 == blk.dim:
        raise NoEsqptError("no nonnegative eigenvalues: spectrum does not "
                           "cross the critical energy")
    return float((i0 - 1) + (-e[i0 - 1]) / (e[i0] - e[i0 - 1]))


# ---------------------------------------------------------------------------
# asymptotic fit near the critical energy
# ---------------------------------------------------------------------------

def fit_asymptotics(block: BlockLike, kmin=5, kmax=None, share_alpha=True,
                    k_c=None) -> AsymptoticFit:
    """Least-squares linear-action coefficient of the quantization law
    -E log|E| + alpha E = 2 pi hbar_omega (k - k_c).

    Eigenvalues with kmin <= |k - k_c| <= kmax enter the fit (default
    kmax = max(10, N/50)); the innermost levels are excluded because the
    first-order quantization breaks down at a quadratic turning point.  The
    barrier frequency hbar_omega = sqrt(Xi)/N is fixed, not fitted.  With
    ``share_alpha`` one coefficient serves both sides of the critical
    energy; the per-side values are reported either way.
    """
    blk = _as_block(block)
    if blk.spec is None:
        raise DomainError("fit needs the model context (N, xi)")
    n = blk.spec.n_particles
    xi = blk.spec.xi
    Xi = barrier_curvature(xi)
    if Xi <= 0.0:
        raise NoEsqptError(f"no barrier at xi = {xi}")
    hw = float(np.sqrt(Xi)) / n
    if kmax is None:
        kmax = max(10, n // 50)
    if kmin < 1:
        raise DomainError("kmin must be at least 1")
    kc = critical_index(blk) if k_c is None else float(k_c)
    e = blk.eigenvalues
    ks = np.arange(blk.dim, dtype=float)
    dk = ks - kc
    sel = (np.abs(dk) >= kmin) & (np.abs(dk) <= kmax) & (np.abs(e) > 0.0)
    if sel.sum() < 6:
        raise FitError(f"only {int(sel.sum())} levels in the fit window "
                       f"[{kmin}, {kmax}]")

    def lsq(mask):
        ew = e[mask]
        denom = float(np.sum(ew * ew))
        if denom < 1e-300 or not np.isfinite(denom):
            raise FitError(f"ill-conditioned fit: sum E^2 = {denom:.2e}")
        alpha = float(np.sum(ew * (2 * np.pi * hw * dk[mask]
                                   + ew * np.log(np.abs(ew)))) / denom)
        res = -ew * np.log(np.abs(ew)) + alpha * ew - 2 * np.pi * hw * dk[mask]
        return alpha, float(np.sqrt(np.mean(res**2)))

    alpha_all, rms = lsq(sel)
    below = sel & (dk < 0)
    above = sel & (dk > 0)
    alpha_below = lsq(below)[0] if below.sum() >= 3 else None
    alpha_above = lsq(above)[0] if above.sum() >= 3 else None
    if share_alpha:
        alpha = alpha_all
    else:
        if alpha_below is None or alpha_above is None:
            raise FitError("per-side fit needs at least 3 levels on each side")
        alpha = alpha_all
    return AsymptoticFit(k_c=kc, alpha=alpha, hbar_omega=hw, Xi=float(Xi),
                         alpha_below=alpha_below if not share_alpha else None,
                         alpha_above=alpha_above if not share_alpha else None,
                         window=(kmin, kmax), rms_residual=rms)


# ---------------------------------------------------------------------------
# finite-size scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRecord:
    """Scaled gap at a fixed index offset from the critical crossing."""

    xi: float
    n_particles: int
    dk: float
    k_c: float
    delta: float
    n_delta: float
    alpha: Optional[float] = None
    n_delta_semiclassical: Optional[float] = None
    n_delta_log_asymptote: Optional[float] = None


def rescale_spec(template: ModelSpec, n_particles, xi) -> ModelSpec:
    """Template at a different system size: block labels keep their meaning
    (parities re-derived) and fermionic degeneracies scale with N to hold
    the filling fraction fixed."""
    kw = {"n_particles": int(n_particles), "xi": float(xi)}
    if template.family in ("lipkin", "vibron_u3", "sb_general"):
        kw["v1"] = (int(n_particles) - template.v2) % 2
    if template.statistics == "fermion":
        scale = n_particles / template.n_particles
        kw["omega1"] = round(template.omega1 * scale)
        kw["omega2"] = round(template.omega2 * scale)
    return replace(template, **kw)


def gap_at_offset(spec: ModelSpec, dk=5.0):
    """(k_c, Delta at k_c + dk) using the windowed solver.

    The gap attached to midpoint index j + 1/2 is E_{j+1} - E_j; the value at
    the noninteger target k_c + dk interpolates linearly between the two
    bracketing gaps.
    """
    op = eigen.build_operator(spec)
    i0 = eigen.sturm_count(op, 0.0)
    if i0 < 2 or i0 == op.dim:
        raise NoEsqptError("spectrum does not cross E = 0 away from the "
                           "ground level")
    target_lo = int(np.floor(i0 - 1 + dk)) - 2
    target_hi = int(np.ceil(i0 + dk)) + 2
    lo = max(0, min(i0 - 1, target_lo))
    hi = min(op.dim - 1, max(i0, target_hi))
    vals = eigen.eig_indices(op, lo, hi)
    ks = np.arange(lo, hi + 1, dtype=float)
    e_lo = vals[int(i0 - 1 - lo)]
    e_hi = vals[int(i0 - lo)]
    kc = (i0 - 1) + (-e_lo) / (e_hi - e_lo)
    gaps = np.diff(vals)
    mid = 0.5 * (ks[1:] + ks[:-1])
    t = kc + dk
    if t < mid[0] or t > mid[-1]:
        raise DomainError("offset target outside the solved slice")
    return float(kc), float(np.interp(t, mid, gaps))


def _pair_partner(xi, xi_set, tol=1e-9):
    for other in xi_set:
        if abs((1.2 - xi) - other) < tol:
            return other
    return None


def calibrate_alpha(n_delta, Xi, dk, n_particles):
    """Linear-action coefficient that makes the Lambert-W gap law reproduce
    one measured scaled gap exactly (closed-form inversion)."""
    w = -(1.0 + 2.0 * np.pi * np.sqrt(Xi) / n_delta)
    arg = w * np.exp(w)
    return float(-np.log(-arg * n_particles / (2.0 * np.pi * np.sqrt(Xi) * dk)))


def scaling_study(template: ModelSpec, xi_set, n_set, dk=5.0) -> List[ScalingRecord]:
    """Scaled gap at fixed offset dk above the crossing, over (xi, N) grids.

    Each record carries the semiclassical companion values: the Lambert-W
    gap law evaluated with a per-symmetric-pair coefficient alpha calibrated
    against the quantum gap at the largest N (pair members share one alpha,
    averaged at calibration), and the extreme logarithmic asymptote.
    """
    xi_set = [float(x) for x in xi_set]
    n_set = sorted(int(n) for n in n_set)
    jobs = [(x, n) for x in xi_set for n in n_set]

    def solve(job):
        x, n = job
        kc, delta = gap_at_offset(rescale_spec(template, n, x), dk=dk)
        return kc, delta

    solved = dict(zip(jobs, _pmap(solve, jobs)))
    n_top = n_set[-1]
    alpha_of = {}
    for x in xi_set:
        if x in alpha_of:
            continue
        partner = _pair_partner(x, xi_set)
        members = [x] if partner is None or partner == x else [x, partner]
        Xi = barrier_curvature(x)
        nd_top = float(np.mean([n_top * solved[(m, n_top)][1] for m in members]))
        alpha = calibrate_alpha(nd_top, Xi, dk, n_top)
        for m in members:
            alpha_of[m] = alpha
    records = []
    for x in xi_set:
        Xi = barrier_curvature(x)
        fit = AsymptoticFit(k_c=0.0, alpha=alpha_of[x],
                            hbar_omega=float(np.sqrt(Xi)), Xi=float(Xi))
        for n in n_set:
            kc, delta = solved[(x, n)]
            records.append(ScalingRecord(
                xi=x, n_particles=n, dk=dk, k_c=kc, delta=delta,
                n_delta=n * delta, alpha=alpha_of[x],
                n_delta_semiclassical=n * semiclassics.esqpt_gap_estimate(
                    fit, n, x, dk),
                n_delta_log_asymptote=semiclassics.esqpt_gap_log_asymptote(n, x),
            ))
    return records


def scaling_exponent(n_values, values):
    """Least-squares slope of log(value) against log(N).

    Returns (slope, standard error).  Requires at least four positive
    samples on an increasing N grid.
    """
    n_values = np.asarray(n_values, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(n_values) < 4:
        raise FitError("need at least 4 points for a scaling exponent")
    if np.any(values <= 0.0):
        raise DomainError("scaling exponent needs positive values")
    x = np.log(n_values)
    y = np.log(values)
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


# ---------------------------------------------------------------------------
# wave functions and degeneracies
# ---------------------------------------------------------------------------

def wavefunction_map(block: BlockLike) -> np.ndarray:
    """P[k, i]: squared amplitude of eigenstate k on basis occupancy i."""
    blk = _as_block(block, want_vectors=True)
    p = (blk.eigenvectors**2).T
    return p / p.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class Cluster:
    """One quasi-degenerate multiplet from a merged-spectrum scan."""

    energy_mean: float
    energies: Tuple[float, ...]
    labels: Tuple[object, ...]

    @property
    def size(self):
        return len(self.energies)


def degeneracy_scan(make_spec: Callable[[object], ModelSpec], blocks,
                    width=None) -> List[Cluster]:
    """Merge the spectra of several blocks and group quasi-degenerate levels.

    ``make_spec(label)`` builds the ModelSpec of each block; ``width`` is the
    clustering window (default 1e-3 of the merged spectral span).  Returns
    clusters ascending in energy, each carrying its member block labels.
    """
    blocks = list(blocks)
    if not blocks:
        raise DomainError("no blocks requested")
    levels = []
    for lab, ev in zip(blocks,
                       _pmap(lambda b: eigen.solve_block(make_spec(b)).eigenvalues,
                             blocks)):
        levels.extend((float(e), lab) for e in ev)
    levels.sort(key=lambda t: t[0])
    es = np.array([e for e, _ in levels])
    span = float(es[-1] - es[0]) if len(es) > 1 else 1.0
    if width is None:
        width = 1e-3 * span
    clusters = []
    cur = [levels[0]]
    for e, lab in levels[1:]:
        if e - cur[-1][0] < width:
            cur.append((e, lab))
        else:
            clusters.append(cur)
            cur = [(e, lab)]
    clusters.append(cur)
    return [Cluster(energy_mean=float(np.mean([e for e, _ in c])),
                    energies=tuple(e for e, _ in c),
                    labels=tuple(lab for _, lab in c))
            for c in clusters]

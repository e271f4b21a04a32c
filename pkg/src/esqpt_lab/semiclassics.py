"""Classical-limit machinery: quadratic-quartic potential, WKB quantization,
and the Lambert-W description of the spectrum near the critical energy.

The classical Hamiltonian underlying every transitional model reads, in the
scaled radial coordinate x on [0, sqrt(2)],

    H = [p^2 + T_theta / x^2] (1-xi)/(2 N^2) + [x^2 p^2 + T_theta] xi/N^2
        + (1-5 xi)/2 x^2 + xi x^4,

with centrifugal eigenvalue T_theta = v(v+n-2) and effective Planck constant
1/N.  Equivalently: position-dependent mass m(x) = 1/(1 - xi + 2 xi x^2) and
potential V(x) = (1-5 xi) x^2/2 + xi x^4, whose barrier top sits at E = 0 for
every xi > 1/5.

Numerics: all orbit integrals are evaluated in the variable u = x^2, where
E - V_eff times u is a cubic polynomial.  Factoring that cubic removes both
turning-point singularities analytically, so the period integrand is smooth
even at the bottom of the well, and the action integrand is smooth up to the
barrier top.  Panel-doubled Gauss-Legendre quadrature then converges to
relative 1e-10 with a handful of refinements.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (ConvergenceError, DivergenceError, DomainError,
                     OutOfSpectrumError)

SQRT2 = float(np.sqrt(2.0))

#: |E| below this is treated as exactly critical where the period diverges
E_FLOOR = 1e-12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ClassicalSystem:
    """Classical reduction of one model block.

    ``n`` is the spatial dimension (the level-2 degeneracy): 1 for the
    double-well problem, 2 for the vibron, 2L+1 for an s-b model.  ``v`` is
    the angular-momentum/seniority label entering the centrifugal energy
    v(v+n-2).
    """

    xi: float
    v: int = 0
    n: int = 2
    N: int = 1

    def __post_init__(self):
        if not (0.0 <= self.xi <= 1.0):
            raise DomainError(f"xi = {self.xi} outside [0, 1]")
        if self.v < 0:
            raise DomainError("v must be nonnegative")
        if self.v > 0 and self.n < 2:
            raise DomainError("nonzero v requires a radial problem (n >= 2)")
        if self.N < 1:
            raise DomainError("N must be positive")

    @property
    def centrifugal(self):
        return float(self.v * (self.v + self.n - 2))

    @property
    def one_dimensional(self):
        return self.n == 1


def potential_terms(sys: ClassicalSystem, x):
    """(V(x), m(x), T_theta) at coordinate x; domain |x| <= sqrt(2)."""
    xa = abs(float(x))
    if xa > SQRT2 + 1e-12:
        raise DomainError(f"|x| = {xa} outside the domain [0, sqrt(2)]")
    u = xa * xa
    V = 0.5 * (1.0 - 5.0 * sys.xi) * u + sys.xi * u * u
    m = 1.0 / (1.0 - sys.xi + 2.0 * sys.xi * u)
    return V, m, sys.centrifugal


def _mass_u(u, xi):
    return 1.0 / (1.0 - xi + 2.0 * xi * u)


def _veff_u(sys, u):
    xi = sys.xi
    val = 0.5 * (1.0 - 5.0 * xi) * u + xi * u * u
    t = sys.centrifugal
    if t:
        val += t * ((1.0 - xi) / (2.0 * u) + xi) / sys.N**2
    return val


def potential_minimum(sys: ClassicalSystem):
    """(x_min, E_min): location and value of the effective potential minimum."""
    xi = sys.xi
    t = sys.centrifugal
    if t == 0.0:
        if xi <= 0.2:
            return 0.0, 0.0
        umin = (5.0 * xi - 1.0) / (4.0 * xi)
        return float(np.sqrt(umin)), float(_veff_u(sys, umin))
    # stationary points of V_eff: 2 xi u^3 + (1-5 xi)/2 u^2 - T(1-xi)/(2N^2) = 0
    coeffs = [2.0 * xi, 0.5 * (1.0 - 5.0 * xi), 0.0,
              -t * (1.0 - xi) / (2.0 * sys.N**2)]
    if xi == 0.0:
        coeffs = coeffs[1:]
    roots = np.roots(coeffs)
    cands = [float(r.real) for r in roots
             if abs(r.imag) < 1e-10 and 0.0 < r.real <= 2.0]
    if not cands:
        raise DomainError("no classical minimum inside the domain")
    umin = min(cands, key=lambda u: _veff_u(sys, u))
    return float(np.sqrt(umin)), float(_veff_u(sys, umin))


def energy_range(sys: ClassicalSystem):
    """Classically allowed energy interval [E_min, E_max]."""
    _, emin = potential_minimum(sys)
    return emin, float(_veff_u(sys, 2.0))


def _orbit_factors(sys, E):
    """Factorized turning polynomial W(u) = u (E - V_eff(u)).

    Returns (u1, u2, u0, kappa, quad): allowed interval (u1, u2), extra root
    u0 (or None for the xi = 0 quadratic), the leading coefficient kappa; the
    residual factor is R(u) = u - u0 (cubic) or 1 (quadratic), so that
    W = kappa (u - u1)(u2 - u) R(u) on the allowed interval.
    """
    xi = sys.xi
    t = sys.centrifugal
    N2 = sys.N**2
    emin, emax = energy_range(sys)
    if E < emin - 1e-12 or E > emax + 1e-12:
        raise DomainError(
            f"E = {E} outside the classical range [{emin:.6g}, {emax:.6g}]")
    c1 = E - (xi * t / N2 if t else 0.0)
    c0 = -t * (1.0 - xi) / (2.0 * N2) if t else 0.0
    if xi == 0.0:
        # quadratic: -u^2/2 + c1 u + c0
        disc = c1 * c1 + 2.0 * c0
        if disc < 0.0:
            raise DomainError("no classical turning points at this energy")
        r = float(np.sqrt(disc))
        u1, u2 = c1 - r, c1 + r
        return max(u1, 0.0), min(u2, 2.0), None, 0.5, True
    roots = np.roots([-xi, -0.5 * (1.0 - 5.0 * xi), c1, c0])
    # E inside the classical range guarantees three real roots; coincident
    # turning points (well bottom) surface as a conjugate pair with tiny
    # imaginary part, so filter on a loose relative tolerance
    real = np.sort(np.array([r.real for r in roots
                             if abs(r.imag) <= 1e-5 * (1.0 + abs(r))]))
    if len(real) != 3:
        raise DomainError("turning-point polynomial has complex roots")
    u0, u1, u2 = (float(r) for r in real)
    return max(u1, 0.0), min(u2, 2.0), u0, xi, False


def turning_points(sys: ClassicalSystem, E):
    """Inner and outer classical turning points (x1, x2) at energy E.

    For E > 0 with v = 0 the motion extends to the origin and x1 = 0.
    """
    u1, u2, _, _, _ = _orbit_factors(sys, E)
    return float(np.sqrt(max(u1, 0.0))), float(np.sqrt(u2))


def _quad_doubling(f, rtol=1e-11, max_doublings=14):
    """Panel-doubled 16-point Gauss-Legendre on [0, pi/2]."""
    a, b = 0.0, 0.5 * np.pi
    prev = None
    panels = 4
    for _ in range(max_doublings):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        pts = (0.5 * (edges[:-1] + edges[1:])[:, None]
               + half * _GL_X[None, :]).ravel()
        val = half * float(f(pts).reshape(panels, -1).sum(axis=0) @ _GL_W)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        panels *= 2
    raise ConvergenceError(
        f"quadrature stalled at {panels} panels, last change "
        f"{abs(val - prev):.2e}")


def _well_factor(sys, E, well):
    """Multiplicity of the single-well integral in the requested bookkeeping.

    Radial problems have a single allowed annulus (factor 1).  For the
    one-dimensional double well the default 'both' counts both parities:
    both wells below the barrier, the full orbit above it (factor 2 either
    way); 'single' keeps one well / one parity (factor 1).
    """
    if not sys.one_dimensional:
        return 1.0
    if well == "both":
        return 2.0
    if well == "single":
        return 1.0
    raise DomainError(f"well must be 'both' or 'single', got {well!r}")


def action(sys: ClassicalSystem, E, well="both"):
    """Orbit action S(E) = closed integral of p dx at energy E.

    Accurate to relative 1e-10; turning-point singularities are removed by
    the exact factorization of the turning polynomial together with the
    substitution u = u1 + (u2 - u1) sin^2(theta).
    """
    u1, u2, u0, kappa, quad = _orbit_factors(sys, E)
    if u2 <= u1:
        return 0.0
    du = u2 - u1
    xi = sys.xi

    def f(theta):
        s2 = np.sin(theta) ** 2
        c2 = 1.0 - s2
        u = u1 + du * s2
        r = 1.0 if quad else (u - u0)
        core = np.sqrt(2.0 * _mass_u(u, xi) * kappa * np.maximum(r, 0.0))
        if u1 == 0.0:
            frac = c2 / du
        else:
            frac = s2 * c2 / u
        return 2.0 * du * du * frac * core

    return _well_factor(sys, E, well) * _quad_doubling(f)


def action_energy_derivative(sys: ClassicalSystem, E, well="both",
                             e_floor=E_FLOOR):
    """dS/dE, the orbit period in scaled time.

    Diverges logarithmically at the barrier top; for a barrier-top-reaching
    system (v = 0, xi > 1/5) energies with |E| < ``e_floor`` raise
    :class:`DivergenceError`.
    """
    if sys.centrifugal == 0.0 and sys.xi > 0.2 and abs(E) < e_floor:
        raise DivergenceError(
            f"period diverges at the barrier top (|E| = {abs(E)} < {e_floor})")
    u1, u2, u0, kappa, quad = _orbit_factors(sys, E)
    xi = sys.xi

    def f(theta):
        u = u1 + (u2 - u1) * np.sin(theta) ** 2
        r = 1.0 if quad else np.maximum(u - u0, 1e-300)
        return 2.0 * np.sqrt(_mass_u(u, xi) / (2.0 * kappa * r))

    return _well_factor(sys, E, well) * _quad_doubling(f)


def action_xi_derivative(sys: ClassicalSystem, E, well="both"):
    """Partial dS/dxi at fixed E (turning-point terms vanish identically)."""
    u1, u2, u0, kappa, quad = _orbit_factors(sys, E)
    xi = sys.xi
    t = sys.centrifugal
    N2 = sys.N**2

    def f(theta):
        u = u1 + (u2 - u1) * np.sin(theta) ** 2
        m = _mass_u(u, xi)
        dm_over_m = (1.0 - 2.0 * u) * m
        dveff = -2.5 * u + u * u
        if t:
            dveff = dveff + t * (1.0 - 1.0 / (2.0 * u)) / N2
        e_minus_v = E - _veff_u(sys, u)
        r = 1.0 if quad else np.maximum(u - u0, 1e-300)
        core = np.sqrt(m / (2.0 * kappa * r))
        return 2.0 * (dm_over_m * e_minus_v - dveff) * core

    return _well_factor(sys, E, well) * _quad_doubling(f)


def wkb_level(sys: ClassicalSystem, k, well="both"):
    """Energy of quantum number k from S(E) = (k + 1/2) 2 pi / N.

    Raises :class:`OutOfSpectrumError` when the target action exceeds the
    total phase-space volume of the domain.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    target = (k + 0.5) * 2.0 * np.pi / sys.N
    emin, emax = energy_range(sys)
    s_top = action(sys, emax, well)
    if target > s_top:
        raise OutOfSpectrumError(
            f"k = {k} needs action {target:.6g} > maximum {s_top:.6g}")
    lo = emin + max(1e-15, abs(emin)) * 1e-13
    hi = emax
    from scipy.optimize import brentq

    return float(brentq(lambda e: action(sys, e, well) - target, lo, hi,
                        xtol=1e-14, rtol=8.9e-16))


def wkb_contour(k, N, xi_grid, v=0, n=2, well="both", with_slope=True):
    """Adiabatic level path E_k(xi): one WKB root per grid point.

    Returns (energies, slopes); slopes come from implicit differentiation
    dE/dxi = -(dS/dxi)/(dS/dE) and are None where the period diverges.
    """
    energies = []
    slopes = []
    for xi in xi_grid:
        sys = ClassicalSystem(xi=float(xi), v=v, n=n, N=N)
        e = wkb_level(sys, k, well)
        energies.append(e)
        if not with_slope:
            slopes.append(None)
            continue
        try:
            slopes.append(-action_xi_derivative(sys, e, well)
                          / action_energy_derivative(sys, e, well))
        except DivergenceError:
            slopes.append(0.0)
    return np.array(energies), (np.array(slopes, dtype=float)
                                if with_slope else None)


def semiclassical_gap(sys: ClassicalSystem, E, well="both"):
    """Level spacing estimate 2 pi / (N dS/dE); vanishes at the barrier top."""
    return 2.0 * np.pi / (sys.N * action_energy_derivative(sys, E, well))


def classical_density(sys: ClassicalSystem, E, x, well="both",
                      e_floor=E_FLOOR):
    """Normalized orbit-time density P(x) proportional to 1/velocity.

    The normalization integral is the period integral, so exactly at the
    barrier top (where the dwell time diverges) the density is not
    normalizable and :class:`DivergenceError` is raised.
    """
    xa = abs(float(x))
    V, m, _ = potential_terms(sys, xa)
    u = xa * xa
    veff = _veff_u(sys, u) if u > 0 else (np.inf if sys.centrifugal else V)
    if E <= veff:
        raise DomainError("x lies at or outside the classical turning points")
    tau_single = action_energy_derivative(sys, E, well="single"
                                          if sys.one_dimensional else "both",
                                          e_floor=e_floor)
    inv_v = np.sqrt(m / (2.0 * (E - veff)))
    if sys.one_dimensional:
        # 1/tau_single normalizes over the full symmetric allowed set
        return float(inv_v / tau_single)
    return float(2.0 * inv_v / tau_single)


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

_INV_E = float(np.exp(-1.0))


def lambert_w(branch, x):
    """Real Lambert W: solution w of w e^w = x on the requested branch.

    ``branch`` is 'principal' (W_0, x >= -1/e) or 'minus_one'
    (W_-1, -1/e <= x < 0).  Accepts scalars or arrays; the result satisfies
    |w e^w - x| <= 1e-12 max(|x|, 1e-300).
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    xv = np.atleast_1d(arr).copy()
    if branch in ("principal", 0):
        if np.any(xv < -_INV_E - 1e-15):
            raise DomainError("principal branch needs x >= -1/e")
        np.clip(xv, -_INV_E, None, out=xv)
        w = _w_principal(xv)
    elif branch in ("minus_one", -1):
        if np.any(xv < -_INV_E - 1e-15) or np.any(xv >= 0.0):
            raise DomainError("branch -1 needs -1/e <= x < 0")
        np.clip(xv, -_INV_E, None, out=xv)
        w = _w_minus_one(xv)
    else:
        raise DomainError(f"unknown branch {branch!r}")
    bad = np.abs(w * np.exp(w) - xv) > 1e-12 * np.maximum(np.abs(xv), 1e-300)
    if np.any(bad):
        raise ConvergenceError(
            f"Lambert W failed the round-trip test at {int(bad.sum())} points")
    return float(w[0]) if scalar else w.reshape(arr.shape)


def _branch_series(p):
    # expansion around the branch point w(-1/e) = -1 in p = +-sqrt(2(ex+1))
    return (-1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3 - 43.0 / 540.0 * p**4
            + 769.0 / 17280.0 * p**5)


def _halley(w, x, iters=60):
    for _ in range(iters):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = np.where(denom != 0.0, f / np.where(denom == 0.0, 1.0, denom), 0.0)
        w = w - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(w))):
            break
    return w


def _w_principal(x):
    w = np.empty_like(x)
    near = x < -_INV_E + 1e-4
    if np.any(near):
        p = np.sqrt(np.maximum(2.0 * (np.e * x[near] + 1.0), 0.0))
        w[near] = _branch_series(p)
    rest = ~near
    if np.any(rest):
        xr = x[rest]
        seed = np.where(xr > np.e, np.log(np.maximum(xr, 1e-300)), xr)
        big = xr > np.e
        if np.any(big):
            lx = np.log(xr[big])
            s = seed[big]
            s = lx - np.log(lx)
            seed[big] = s
        w[rest] = _halley(seed, xr)
    # polish the near-branch values that are not extremely close
    polish = near & (x > -_INV_E + 1e-8)
    if np.any(polish):
        w[polish] = _halley(w[polish], x[polish])
    return w


def _w_minus_one(x):
    w = np.empty_like(x)
    near = x < -_INV_E + 1e-4
    if np.any(near):
        p = np.sqrt(np.maximum(2.0 * (np.e * x[near] + 1.0), 0.0))
        w[near] = _branch_series(-p)
    rest = ~near
    if np.any(rest):
        xr = x[rest]
        lx = np.log(-xr)
        seed = lx - np.log(-lx)
        w[rest] = _halley(seed, xr)
    polish = near & (x > -_INV_E + 1e-8)
    if np.any(polish):
        w[polish] = _halley(w[polish], x[polish])
    return w


# ---------------------------------------------------------------------------
# asymptotic spectrum and gap near the critical energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFit:
    """Parameters of the -E log|E| quantization law near the critical energy.

    ``k_c`` is the (noninteger) index where the spectrum crosses E = 0,
    ``alpha`` the fitted linear-action coefficient (optionally split per
    side), ``hbar_omega`` the barrier frequency sqrt(Xi)/N and ``Xi`` the
    barrier curvature (1-xi)(5xi-1).
    """

    k_c: float
    alpha: float
    hbar_omega: float
    Xi: float
    alpha_below: Optional[float] = None
    alpha_above: Optional[float] = None
    window: Optional[tuple] = None
    rms_residual: Optional[float] = None

    def side_alpha(self, dk):
        if dk >= 0:
            return self.alpha if self.alpha_above is None else self.alpha_above
        return self.alpha if self.alpha_below is None else self.alpha_below

    def with_kc(self, k_c):
        return replace(self, k_c=k_c)


def barrier_curvature(xi):
    """Xi(xi) = (1 - xi)(5 xi - 1): squared scaled barrier frequency.

    Positive exactly where the potential has a barrier (xi > 1/5).  Evaluated
    in the completed-square form 0.8 - 5 u^2 with u antisymmetrized under
    xi -> 1.2 - xi, so reflected arguments give bit-identical values.
    """
    u = 0.5 * ((xi - 0.6) - ((1.2 - xi) - 0.6))
    return 0.8 - 5.0 * u * u


def _w_argument(alpha, hw, adk):
    arg = -np.exp(-alpha) * 2.0 * np.pi * hw * adk
    if arg <= -_INV_E:
        raise DomainError(
            f"|k - k_c| = {adk:.3g} too far from criticality for the "
            "logarithmic quantization law (W argument below -1/e)")
    return arg


def esqpt_energy_estimate(fit: AsymptoticFit, N, xi, k):
    """Level energy from the inverted -E log|E| quantization law.

    Uses branch W_-1 with the distance |k - k_c| and attaches sign(k - k_c)
    to the result, which reproduces the positive-side formula and its
    |E|-mirrored negative side.
    """
    Xi = barrier_curvature(xi)
    if Xi <= 0.0:
        raise DomainError("no barrier (xi <= 1/5): the estimate does not apply")
    hw = np.sqrt(Xi) / N
    dk = k - fit.k_c
    if dk == 0.0:
        raise DomainError("k = k_c: energy estimate is identically zero")
    w = lambert_w("minus_one", _w_argument(fit.side_alpha(dk), hw, abs(dk)))
    return float(np.sign(dk) * (-2.0 * np.pi * hw * abs(dk) / w))


def esqpt_gap_estimate(fit: AsymptoticFit, N, xi, k):
    """Adjacent-level gap from the same law; nonnegative, vanishing at k_c."""
    Xi = barrier_curvature(xi)
    if Xi <= 0.0:
        raise DomainError("no barrier (xi <= 1/5): the estimate does not apply")
    hw = np.sqrt(Xi) / N
    dk = k - fit.k_c
    if dk == 0.0:
        return 0.0
    w = lambert_w("minus_one", _w_argument(fit.side_alpha(dk), hw, abs(dk)))
    return float(-2.0 * np.pi * hw / (w + 1.0))


def esqpt_gap_log_asymptote(N, xi):
    """Extreme large-N estimate of the scaled gap: 2 pi sqrt(Xi) / log N."""
    Xi = barrier_curvature(xi)
    if Xi <= 0.0:
        raise DomainError("no barrier (xi <= 1/5)")
    if N <= 1:
        raise DomainError("need N > 1")
    return float(2.0 * np.pi * np.sqrt(Xi) / np.log(N))

"""Two-level pairing models: conserved blocks and exact Hamiltonian matrices.

Every model here consists of two single-particle levels populated by N
bosons or fermions, with a pairing-type interaction that conserves the
seniority quantum number of each level.  Within a seniority block the
Hamiltonian only connects occupancies differing by one transferred pair, so
each block is a real symmetric tridiagonal matrix in the level-2 occupancy
basis.

Model families
--------------
``lipkin``
    Two singlet boson levels (Schwinger realization).  Blocks are labelled
    by the parity g = N_b mod 2 of the upper-level occupancy.
``vibron_u3``
    A singlet s boson plus a doubly degenerate (m = +-1) b boson; planar
    angular momentum l is conserved.  Built either directly in Fock space
    (:func:`build_vibron_fock_hamiltonian`) or as its pairing twin.
``sb_general``
    Singlet s boson plus a (2L+1)-fold degenerate b boson.
``bosonic_pairing`` / ``fermionic_pairing``
    Both levels nontrivially degenerate; blocks labelled by the seniority
    pair (v1, v2).
``custom_quasispin``
    Arbitrary single-level energies and pair-coupling matrix
    (:func:`build_quasispin_hamiltonian`).

Control parameter convention: H(xi) interpolates between the occupancy
Hamiltonian N_2/N at xi=0 and a pure pair-coupling Hamiltonian at xi=1, with
coefficients scaled so the critical point sits at xi_c = 1/5 for every N.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DomainError, EmptyBlockError

FAMILIES = (
    "lipkin",
    "vibron_u3",
    "sb_general",
    "bosonic_pairing",
    "fermionic_pairing",
    "custom_quasispin",
)

#: families built from boson operators
_BOSONIC = {"lipkin", "vibron_u3", "sb_general", "bosonic_pairing"}

#: families whose transitional Hamiltonian subtracts the diagonal
#: xi*(N + 2L1 + 2L2)/N by default, aligning the barrier top with E = 0.
#: For the vibron this shift is exactly the constant separating the pairing
#: twin from the direct Fock construction, so the two spectra coincide.
_SHIFT_DEFAULT = {"lipkin", "vibron_u3", "sb_general", "bosonic_pairing"}


@dataclass(frozen=True)
class CustomCouplings:
    """Level energies and pair-coupling matrix for ``custom_quasispin``."""

    eps1: float
    eps2: float
    g11: float
    g12: float
    g22: float


@dataclass(frozen=True)
class ModelSpec:
    """Complete specification of one conserved block of one model.

    ``omega1``/``omega2`` are the half-degeneracies Omega = (2j+1)/2 of the
    two levels (1/2 for a singlet boson level).  ``v1``/``v2`` are the level
    seniorities; for the vibron family v2 equals |l| and v1 is the parity of
    the s-level occupancy.  ``phase`` picks the relative sign in the summed
    pair operator (S1+- +- S2+-); the two choices are unitarily equivalent
    within a block and give identical spectra.
    """

    family: str
    statistics: str
    omega1: float
    omega2: float
    n_particles: int
    v1: int
    v2: int
    xi: float = 0.0
    phase: str = "plus"
    diagonal_shift: Optional[bool] = None
    custom: Optional[CustomCouplings] = None

    # -- constructors -------------------------------------------------

    @classmethod
    def lipkin(cls, n_particles, parity=0, xi=0.0, **kw):
        """Lipkin model block of given parity g in {0, 1}."""
        if parity not in (0, 1):
            raise DomainError(f"lipkin parity must be 0 or 1, got {parity}")
        return cls("lipkin", "boson", 0.5, 0.5, n_particles,
                   (n_particles - parity) % 2, parity, xi, **kw)

    @classmethod
    def vibron(cls, n_particles, l=0, xi=0.0, **kw):
        """U(3) vibron block at planar angular momentum l."""
        if abs(l) > n_particles:
            raise DomainError(f"|l| = {abs(l)} exceeds N = {n_particles}")
        return cls("vibron_u3", "boson", 0.5, 1.0, n_particles,
                   (n_particles - abs(l)) % 2, abs(l), xi, **kw)

    @classmethod
    def sb(cls, n_particles, L, v=0, xi=0.0, **kw):
        """s-b model block: singlet s level plus a (2L+1)-fold b level."""
        return cls("sb_general", "boson", 0.5, L + 0.5, n_particles,
                   (n_particles - v) % 2, v, xi, **kw)

    @classmethod
    def bosonic_pairing(cls, n_particles, L1, L2, v1=0, v2=0, xi=0.0, **kw):
        return cls("bosonic_pairing", "boson", L1 + 0.5, L2 + 0.5,
                   n_particles, v1, v2, xi, **kw)

    @classmethod
    def fermionic_pairing(cls, n_particles, omega1, omega2, v1=0, v2=0,
                          xi=0.0, **kw):
        """Fermionic block; omega_j = (2j_j + 1)/2 must be a positive integer."""
        return cls("fermionic_pairing", "fermion", omega1, omega2,
                   n_particles, v1, v2, xi, **kw)

    @classmethod
    def quasispin(cls, statistics, omega1, omega2, n_particles, v1, v2,
                  eps1, eps2, g11, g12, g22, **kw):
        """Free-form pairing Hamiltonian block with explicit couplings."""
        cpl = CustomCouplings(eps1, eps2, g11, g12, g22)
        return cls("custom_quasispin", statistics, omega1, omega2,
                   n_particles, v1, v2, custom=cpl, **kw)

    # -- derived labels ------------------------------------------------

    @property
    def parity(self):
        """Lipkin grading g (= v2)."""
        return self.v2

    @property
    def l(self):
        """Vibron planar angular momentum magnitude (= v2)."""
        return self.v2

    def block_label(self):
        if self.family == "lipkin":
            return f"g={self.v2}"
        if self.family == "vibron_u3":
            return f"l={self.v2}"
        return f"v=({self.v1},{self.v2})"

    def with_xi(self, xi):
        return replace(self, xi=xi)

    def shift_value(self):
        """Diagonal shift xi*(N + 2L1 + 2L2)/N subtracted when enabled.

        2L_j is the degeneracy of level j minus one, i.e. 2*omega_j - 1.
        """
        two_l = (2 * self.omega1 - 1) + (2 * self.omega2 - 1)
        return self.xi * (self.n_particles + two_l) / self.n_particles

    def shift_enabled(self):
        if self.diagonal_shift is not None:
            return self.diagonal_shift
        return self.family in _SHIFT_DEFAULT

    # -- validation ----------------------------------------------------

    def validate(self):
        """Check all structural invariants; raise DomainError on violation."""
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.statistics not in ("boson", "fermion"):
            raise DomainError(f"unknown statistics {self.statistics!r}")
        if self.family in _BOSONIC and self.statistics != "boson":
            raise DomainError(f"{self.family} requires boson statistics")
        if self.family == "fermionic_pairing" and self.statistics != "fermion":
            raise DomainError("fermionic_pairing requires fermion statistics")
        N = self.n_particles
        if N < 1 or N != int(N):
            raise DomainError(f"n_particles must be a positive integer, got {N}")
        for om in (self.omega1, self.omega2):
            if om <= 0 or round(2 * om) != 2 * om:
                raise DomainError(f"half-degeneracy must be a positive half-integer, got {om}")
        if self.family != "custom_quasispin" and not (0.0 <= self.xi <= 1.0):
            raise DomainError(f"xi = {self.xi} outside [0, 1]")
        if self.phase not in ("plus", "minus"):
            raise DomainError(f"phase must be 'plus' or 'minus', got {self.phase!r}")
        if self.v1 < 0 or self.v2 < 0:
            raise DomainError("seniorities must be nonnegative")
        if self.statistics == "fermion":
            cap = int(2 * self.omega1 + 2 * self.omega2)
            if N > cap:
                raise DomainError(
                    f"N = {N} violates the Pauli bound 2*Omega1 + 2*Omega2 = {cap}")
            if self.omega1 != int(self.omega1) or self.omega2 != int(self.omega2):
                raise DomainError("fermionic levels need even degeneracy (integer Omega)")
            for v, om in ((self.v1, self.omega1), (self.v2, self.omega2)):
                if v > om:
                    raise DomainError(f"seniority {v} exceeds Omega = {om}")
        else:
            # a singlet boson level only supports seniority 0 or 1
            for v, om in ((self.v1, self.omega1), (self.v2, self.omega2)):
                if om == 0.5 and v not in (0, 1):
                    raise DomainError(f"singlet level seniority must be 0 or 1, got {v}")
        if self.family == "custom_quasispin" and self.custom is None:
            raise DomainError("custom_quasispin requires explicit couplings")
        return self


@dataclass(frozen=True)
class BlockBasis:
    """Ordered occupancy basis of one seniority block.

    ``occupancies[i]`` is the level-2 occupancy N_2 of basis state i,
    ascending in steps of two.
    """

    occupancies: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", len(self.occupancies))


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix stored as (diag, offdiag)."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        e = np.asarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or len(e) != max(len(d) - 1, 0):
            raise DomainError("need diag of length n and offdiag of length n-1")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise DomainError("non-finite matrix entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self):
        return len(self.diag)

    def norm_inf(self):
        """Row-sum norm; cheap spectral bound."""
        if self.dim == 1:
            return abs(self.diag[0])
        e = np.abs(self.offdiag)
        s = np.abs(self.diag).copy()
        s[:-1] += e
        s[1:] += e
        return float(s.max())

    def matvec(self, x):
        y = self.diag * x
        if self.dim > 1:
            y[:-1] += self.offdiag * x[1:]
            y[1:] += self.offdiag * x[:-1]
        return y

    def dense(self):
        a = np.diag(self.diag)
        if self.dim > 1:
            a += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return a


# ---------------------------------------------------------------------------
# quasispin ladder amplitudes
# ---------------------------------------------------------------------------

def quasispin_lowering_amplitude(statistics, s, sz):
    """Norm of the pair annihilator acting on the quasispin state |s, sz>.

    Fermions carry an su(2) algebra: sqrt((s+sz)(s-sz+1)) with |sz| <= s.
    Bosons carry su(1,1) (positive discrete series): sqrt((sz-s)(sz+s-1))
    with sz >= s.  sz is related to the level occupancy by
    sz = (n + omega)/2 for bosons and (n - omega)/2 for fermions.
    """
    if statistics == "fermion":
        if abs(sz) > s + 1e-12:
            raise DomainError(f"|sz| = {abs(sz)} exceeds s = {s}")
        val = (s + sz) * (s - sz + 1.0)
    elif statistics == "boson":
        if sz < s - 1e-12:
            raise DomainError(f"sz = {sz} below the lowest weight s = {s}")
        val = (sz - s) * (sz + s - 1.0)
    else:
        raise DomainError(f"unknown statistics {statistics!r}")
    return float(np.sqrt(max(val, 0.0)))


def pair_annihilation_amplitude(statistics, omega, v, n):
    """Ladder amplitude of one level at occupancy n within its seniority-v irrep."""
    if statistics == "boson":
        s = 0.5 * (omega + v)
        sz = 0.5 * (n + omega)
    else:
        s = 0.5 * (omega - v)
        sz = 0.5 * (n - omega)
    return quasispin_lowering_amplitude(statistics, s, sz)


# ---------------------------------------------------------------------------
# block enumeration
# ---------------------------------------------------------------------------

def enumerate_block(spec: ModelSpec) -> BlockBasis:
    """Ordered occupancy basis of the block selected by ``spec``.

    Raises :class:`EmptyBlockError` when the pair-parity constraint
    N - v1 - v2 even fails or the Pauli bounds leave no states.
    """
    spec.validate()
    N, v1, v2 = spec.n_particles, spec.v1, spec.v2
    if v1 + v2 > N:
        raise EmptyBlockError(f"v1 + v2 = {v1 + v2} exceeds N = {N}")
    if (N - v1 - v2) % 2 != 0:
        raise EmptyBlockError(
            f"parity mismatch: N - v1 - v2 = {N - v1 - v2} must be even")
    lo, hi = v2, N - v1
    if spec.statistics == "fermion":
        lo = max(lo, N - (int(2 * spec.omega1) - v1))
        hi = min(hi, int(2 * spec.omega2) - v2)
    if hi < lo:
        raise EmptyBlockError("Pauli bounds leave no states in this block")
    return BlockBasis(np.arange(lo, hi + 1, 2, dtype=np.int64))


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------

def build_quasispin_hamiltonian(spec: ModelSpec) -> TridiagonalOperator:
    """Matrix of H = sum_j eps_j N_j + sum_{j'j} G_{j'j} S_{j'+} S_{j-}.

    The couplings come from ``spec.custom``.  The one-body term is written in
    occupancy form (the quasispin z-projections reduce to the occupancies up
    to block constants).  Cross pair transfer changes N_2 by +-2, so the
    block matrix is tridiagonal.
    """
    if spec.custom is None:
        raise DomainError("spec.custom couplings are required")
    c = spec.custom
    return _assemble(spec, c.eps1, c.eps2, c.g11, c.g12, c.g22, 0.0)


def build_transitional_hamiltonian(spec: ModelSpec) -> TridiagonalOperator:
    """Block matrix of the occupancy--pairing interpolation at ``spec.xi``.

    H = (1-xi)/N * N_2 + s * (4 xi / N^2) (S1+ + sigma S2+)(S1- + sigma S2-),

    where sigma is ``spec.phase`` and the overall interaction sign s is +1
    for bosons and -1 for fermions.  Those are the signs for which the
    interaction term acts attractively in every family: for bosons the
    summed su(1,1) pair coupling with positive coefficient is the pairing
    image of the attractive multipole interaction (they differ by the block
    constant xi*[N(N+2L) - sum_j v_j(v_j + 2L_j - 1)]/N^2), while for the
    compact fermionic su(2) algebra the attractive form carries the negative
    coefficient directly.  Both conventions put the ground-state critical
    point at xi_c = 1/5 and the excited-state critical energy at E = 0 once
    the default diagonal shift is applied.

    When ``spec.shift_enabled()`` the diagonal xi*(N + 2L1 + 2L2)/N is
    subtracted; this is exact alignment for zero-seniority blocks.
    """
    if spec.family == "custom_quasispin":
        raise DomainError("use build_quasispin_hamiltonian for custom couplings")
    N = spec.n_particles
    sign = 1.0 if spec.statistics == "boson" else -1.0
    g = sign * 4.0 * spec.xi / N**2
    sigma = 1.0 if spec.phase == "plus" else -1.0
    shift = spec.shift_value() if spec.shift_enabled() else 0.0
    return _assemble(spec, 0.0, (1.0 - spec.xi) / N, g, sigma * g, g, shift)


def _amplitudes(statistics, omega, v, n):
    """Vectorized :func:`pair_annihilation_amplitude` over an occupancy array."""
    n = np.asarray(n, dtype=float)
    if statistics == "boson":
        s = 0.5 * (omega + v)
        sz = 0.5 * (n + omega)
        val = (sz - s) * (sz + s - 1.0)
    else:
        s = 0.5 * (omega - v)
        sz = 0.5 * (n - omega)
        val = (s + sz) * (s - sz + 1.0)
    return np.sqrt(np.maximum(val, 0.0))


def _assemble(spec, eps1, eps2, g11, g12, g22, shift):
    basis = enumerate_block(spec)
    occ = basis.occupancies.astype(float)
    N = float(spec.n_particles)
    amp1 = _amplitudes(spec.statistics, spec.omega1, spec.v1, N - occ)
    amp2 = _amplitudes(spec.statistics, spec.omega2, spec.v2, occ)
    diag = eps1 * (N - occ) + eps2 * occ + g11 * amp1**2 + g22 * amp2**2 - shift
    # <N2 - 2| S1+ S2- |N2> = A1(N1 + 2) * A2(N2)
    amp1_up = _amplitudes(spec.statistics, spec.omega1, spec.v1, N - occ[1:] + 2)
    off = g12 * amp2[1:] * amp1_up
    return TridiagonalOperator(diag, off)


def build_vibron_fock_hamiltonian(n_particles, l, xi) -> TridiagonalOperator:
    """Vibron Hamiltonian at angular momentum l by direct operator application.

    H = (1-xi)/N * N_b - xi/N^2 [ (D+ D- + D- D+)/2 + l^2 ]

    with D+- = +-sqrt(2) (b+-1^dag s - s^dag b-+1) applied exactly to the
    occupation states |n_s, n_+, n_->.  The combination conserves l and
    changes n_b by 0 or +-2, giving a tridiagonal block.
    """
    spec = ModelSpec.vibron(n_particles, l, xi).validate()
    basis = enumerate_block(spec)
    N = n_particles
    labs = abs(l)
    nb = basis.occupancies
    index = {int(n): i for i, n in enumerate(nb)}
    dim = basis.dim
    qcol = np.zeros((dim, dim))

    def apply_dplus(states):
        out = {}
        for (ns, npl, nmi), c in states.items():
            if ns > 0:
                key = (ns - 1, npl + 1, nmi)
                out[key] = out.get(key, 0.0) + c * np.sqrt(2.0 * ns * (npl + 1))
            if nmi > 0:
                key = (ns + 1, npl, nmi - 1)
                out[key] = out.get(key, 0.0) - c * np.sqrt(2.0 * (ns + 1) * nmi)
        return out

    def apply_dminus(states):
        out = {}
        for (ns, npl, nmi), c in states.items():
            if ns > 0:
                key = (ns - 1, npl, nmi + 1)
                out[key] = out.get(key, 0.0) - c * np.sqrt(2.0 * ns * (nmi + 1))
            if npl > 0:
                key = (ns + 1, npl - 1, nmi)
                out[key] = out.get(key, 0.0) + c * np.sqrt(2.0 * (ns + 1) * npl)
        return out

    for j, n in enumerate(nb):
        start = {(N - int(n), (int(n) + l) // 2, (int(n) - l) // 2): 1.0}
        acc = {}
        for first, second in ((apply_dminus, apply_dplus),
                              (apply_dplus, apply_dminus)):
            for key, c in second(first(start)).items():
                acc[key] = acc.get(key, 0.0) + 0.5 * c
        for (ns, npl, nmi), c in acc.items():
            qcol[index[npl + nmi], j] += c
        qcol[j, j] += labs * labs

    herm_defect = np.abs(qcol - qcol.T).max()
    if herm_defect > 1e-10 * max(np.abs(qcol).max(), 1.0):
        raise DomainError(f"operator application lost hermiticity ({herm_defect:.2e})")
    h = -xi / N**2 * 0.5 * (qcol + qcol.T)
    h[np.diag_indices(dim)] += (1.0 - xi) / N * nb
    band = np.abs(h - np.diag(np.diag(h))
                  - np.diag(np.diag(h, 1), 1) - np.diag(np.diag(h, -1), -1)).max()
    if band > 1e-12 * max(np.abs(h).max(), 1.0):
        raise DomainError("vibron block is not tridiagonal")
    return TridiagonalOperator(np.diag(h).copy(), np.diag(h, 1).copy())


def multipole_pairing_shift(n_particles, L, v, kappa, phase="plus"):
    """Block constant kappa*(-1)^L [N(N+2L) - v(v+2L-1)] separating the
    multipole and pairing forms of the s-b interaction.

    The value is independent of the multipole phase choice; ``phase`` is
    accepted for bookkeeping (the paired pair-operator phase is the opposite
    one for even L and the same one for odd L).
    """
    if phase not in ("plus", "minus"):
        raise DomainError(f"phase must be 'plus' or 'minus', got {phase!r}")
    if v > n_particles or (n_particles - v) % 2:
        raise DomainError("need v <= N with N - v even")
    N = n_particles
    return kappa * (-1.0) ** L * (N * (N + 2 * L) - v * (v + 2 * L - 1))

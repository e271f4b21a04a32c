"""Dense second-quantized machinery.

This module builds occupation-basis sectors and explicit operator matrices
for small systems.  It serves two purposes:

* an independent oracle for the closed-form tridiagonal builders in
  :mod:`esqpt_lab.models` (same physical operators, entirely different
  construction route), and
* :func:`verify_operator_identity`, the numerical check of the Casimir
  decomposition of the single-level pair coupling,
  4 S+ S- = -N_b + C2[u(n)] - C2[so(n)]/2.

Everything here is dense and scales factorially; keep particle numbers small
(N <= 8 or so).  Production spectra always go through the tridiagonal path.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import factorial, sqrt

import numpy as np

from .errors import DomainError

_DIM_CAP = 20000


# ---------------------------------------------------------------------------
# occupation bases
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def boson_sector(num_modes, n):
    """All boson occupation tuples of ``num_modes`` modes with total n."""
    if num_modes == 1:
        return ((n,),)
    out = []
    for k in range(n, -1, -1):
        for rest in boson_sector(num_modes - 1, n - k):
            out.append((k,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def fermion_sector(num_modes, n):
    """All fermion occupation bittuples of ``num_modes`` modes with total n."""
    out = []
    for occ in combinations(range(num_modes), n):
        state = [0] * num_modes
        for i in occ:
            state[i] = 1
        out.append(tuple(state))
    return tuple(out)


def _sector(statistics, num_modes, n):
    if n < 0:
        return ()
    if statistics == "boson":
        return boson_sector(num_modes, n)
    return fermion_sector(num_modes, n) if n <= num_modes else ()


def annihilator(statistics, num_modes, mode, n):
    """Matrix of c_mode from the n-particle to the (n-1)-particle sector."""
    src = _sector(statistics, num_modes, n)
    dst = _sector(statistics, num_modes, n - 1)
    dst_index = {s: i for i, s in enumerate(dst)}
    a = np.zeros((len(dst), len(src)))
    for j, s in enumerate(src):
        if s[mode] == 0:
            continue
        t = list(s)
        t[mode] -= 1
        if statistics == "boson":
            amp = sqrt(s[mode])
        else:
            amp = (-1.0) ** sum(s[:mode])
        a[dst_index[tuple(t)], j] = amp
    return a


# ---------------------------------------------------------------------------
# level descriptors and pair operators
# ---------------------------------------------------------------------------

class Level:
    """One single-particle level: substate m-values and time-reversal phases.

    ``pair_phase(m)`` is the phase in the pair annihilator
    S- = (1/2) sum_m phase(m) c_{-m} c_m.
    """

    def __init__(self, m_values, pair_phases):
        self.m_values = tuple(m_values)
        self.pair_phases = tuple(pair_phases)
        if len(self.m_values) != len(self.pair_phases):
            raise DomainError("each substate needs a pair phase")

    @property
    def degeneracy(self):
        return len(self.m_values)

    @property
    def omega(self):
        return 0.5 * self.degeneracy

    @classmethod
    def boson(cls, L):
        """Odd-degeneracy boson level b^(L): phases (-1)^(L-m)."""
        ms = [L - i for i in range(2 * L + 1)]
        return cls(ms, [(-1.0) ** (L - m) for m in ms])

    @classmethod
    def boson_planar(cls):
        """Two-substate boson level (m = +-1), pairs (m, -m) with unit phase."""
        return cls((1, -1), (1.0, 1.0))

    @classmethod
    def singlet(cls):
        """Single-substate boson level; S- = (1/2) c c."""
        return cls((0,), (1.0,))

    @classmethod
    def fermion(cls, j):
        """Fermion level of angular momentum j: phases (-1)^(j-m)."""
        twoj = round(2 * j)
        if twoj % 2 == 0:
            raise DomainError("fermion level needs half-integer j")
        ms = [(twoj - 2 * i) / 2 for i in range(twoj + 1)]
        return cls(ms, [(-1.0) ** round(j - m) for m in ms])


def _level_for(statistics, omega):
    """Default Level descriptor for a half-degeneracy omega."""
    if statistics == "fermion":
        return Level.fermion(omega - 0.5)
    deg = round(2 * omega)
    if deg == 1:
        return Level.singlet()
    if deg % 2 == 1:
        return Level.boson((deg - 1) // 2)
    if deg == 2:
        return Level.boson_planar()
    # even degeneracy > 2: pair (m, -m) over abstract labels, unit phases
    half = deg // 2
    ms = list(range(1, half + 1)) + list(range(-1, -half - 1, -1))
    return Level(ms, [1.0] * deg)


def pair_annihilator_matrix(statistics, levels, which, n):
    """S_- of ``levels[which]`` from the n- to the (n-2)-particle sector.

    All levels live in one concatenated mode list; ``n`` is the *total*
    particle number of the source sector.
    """
    offsets = []
    k = 0
    for lv in levels:
        offsets.append(k)
        k += lv.degeneracy
    num_modes = k
    lv = levels[which]
    off = offsets[which]
    mode_of = {m: off + i for i, m in enumerate(lv.m_values)}
    dim_lo = len(_sector(statistics, num_modes, n - 2))
    dim_hi = len(_sector(statistics, num_modes, n))
    s = np.zeros((dim_lo, dim_hi))
    for i, m in enumerate(lv.m_values):
        if -m not in mode_of:
            raise DomainError(f"level lacks the conjugate substate of m={m}")
        a_m = annihilator(statistics, num_modes, mode_of[m], n)
        a_conj = annihilator(statistics, num_modes, mode_of[-m], n - 1)
        s += 0.5 * lv.pair_phases[i] * (a_conj @ a_m)
    return s


def occupancy_matrix(statistics, levels, which, n):
    """Diagonal matrix of the particle number of one level on the n-sector."""
    offsets = []
    k = 0
    for lv in levels:
        offsets.append(k)
        k += lv.degeneracy
    sector = _sector(statistics, k, n)
    off = offsets[which]
    deg = levels[which].degeneracy
    return np.diag([float(sum(s[off:off + deg])) for s in sector])


# ---------------------------------------------------------------------------
# dense block oracle
# ---------------------------------------------------------------------------

def _seniority_seed(statistics, level, v):
    """A normalized v-particle state of one level annihilated by its S-."""
    if v == 0:
        vec = np.ones(1)
        return vec
    sm = pair_annihilator_matrix(statistics, [level], 0, v)
    if sm.shape[0] == 0:
        dim = len(_sector(statistics, level.degeneracy, v))
        vec = np.zeros(dim)
        vec[0] = 1.0
        return vec
    _, sv, vt = np.linalg.svd(sm)
    null = vt[np.sum(sv > 1e-10):]
    if len(null) == 0:
        raise DomainError(f"no seniority-{v} state in this level")
    return null[0]


def _embed_product(statistics, levels, vec1, n1, vec2, n2):
    """Tensor state |vec1 (level 1), vec2 (level 2)> in the (n1+n2)-sector."""
    l1, l2 = levels
    sec1 = _sector(statistics, l1.degeneracy, n1)
    sec2 = _sector(statistics, l2.degeneracy, n2)
    full = _sector(statistics, l1.degeneracy + l2.degeneracy, n1 + n2)
    index = {s: i for i, s in enumerate(full)}
    out = np.zeros(len(full))
    # level-1 modes come first in the concatenated ordering, so the product
    # state needs no reordering sign even for fermions
    for i, s1 in enumerate(sec1):
        if vec1[i] == 0.0:
            continue
        for j, s2 in enumerate(sec2):
            if vec2[j] == 0.0:
                continue
            out[index[s1 + s2]] = vec1[i] * vec2[j]
    return out


def pairing_block_dense(statistics, levels, n_particles, v1, v2,
                        eps=(0.0, 0.0), g=((0.0, 0.0), (0.0, 0.0))):
    """Matrix of the pairing Hamiltonian in the ladder basis of one block.

    Basis states are S1+^a S2+^b |seed(v1) seed(v2)>, normalized, ordered by
    ascending level-2 occupancy.  Returns the dense block matrix; compare
    against the closed-form tridiagonal construction.
    """
    N = n_particles
    if (N - v1 - v2) % 2:
        raise DomainError("empty block: N - v1 - v2 odd")
    num_modes = levels[0].degeneracy + levels[1].degeneracy
    if len(_sector(statistics, num_modes, N)) > _DIM_CAP:
        raise DomainError("sector exceeds the dense-oracle dimension cap")
    seed = _embed_product(statistics, levels,
                          _seniority_seed(statistics, levels[0], v1), v1,
                          _seniority_seed(statistics, levels[1], v2), v2)
    # raise to total N: family over b = number of level-2 pairs, restricted
    # to the occupancy window allowed by the Pauli bounds
    n2_lo, n2_hi = v2, N - v1
    if statistics == "fermion":
        n2_lo = max(n2_lo, N - (levels[0].degeneracy - v1))
        n2_hi = min(n2_hi, levels[1].degeneracy - v2)
    states = []
    npairs = (N - v1 - v2) // 2
    for b in range((n2_lo - v2) // 2, (n2_hi - v2) // 2 + 1):
        a = npairs - b
        vec = seed
        n_cur = v1 + v2
        for _ in range(b):
            vec = pair_annihilator_matrix(statistics, levels, 1, n_cur + 2).T @ vec
            n_cur += 2
        for _ in range(a):
            vec = pair_annihilator_matrix(statistics, levels, 0, n_cur + 2).T @ vec
            n_cur += 2
        nrm = np.linalg.norm(vec)
        if nrm < 1e-12:
            raise DomainError("Pauli-blocked ladder state in this block")
        states.append(vec / nrm)
    basis = np.array(states).T  # columns ordered by ascending N2
    s1m = pair_annihilator_matrix(statistics, levels, 0, N)
    s2m = pair_annihilator_matrix(statistics, levels, 1, N)
    n1 = occupancy_matrix(statistics, levels, 0, N)
    n2 = occupancy_matrix(statistics, levels, 1, N)
    h = (eps[0] * n1 + eps[1] * n2
         + g[0][0] * (s1m.T @ s1m) + g[1][1] * (s2m.T @ s2m)
         + g[0][1] * (s1m.T @ s2m) + g[1][0] * (s2m.T @ s1m))
    return basis.T @ h @ basis


def dense_transitional_block(spec):
    """Dense oracle for :func:`models.build_transitional_hamiltonian`."""
    levels = [_level_for(spec.statistics, spec.omega1),
              _level_for(spec.statistics, spec.omega2)]
    N = spec.n_particles
    sign = 1.0 if spec.statistics == "boson" else -1.0
    gg = sign * 4.0 * spec.xi / N**2
    sigma = 1.0 if spec.phase == "plus" else -1.0
    h = pairing_block_dense(spec.statistics, levels, N, spec.v1, spec.v2,
                            eps=(0.0, (1.0 - spec.xi) / N),
                            g=((gg, sigma * gg), (sigma * gg, gg)))
    if spec.shift_enabled():
        h = h - spec.shift_value() * np.eye(h.shape[0])
    return h


# ---------------------------------------------------------------------------
# Casimir identity check
# ---------------------------------------------------------------------------

def clebsch_gordan(j1, m1, j2, m2, J, M):
    """Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M> (Racah closed form)."""
    if m1 + m2 != M:
        return 0.0
    if not (abs(j1 - j2) <= J <= j1 + j2):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0

    def f(x):
        xi = round(x)
        if xi < 0:
            raise DomainError("negative factorial argument")
        return factorial(xi)

    pref = (2 * J + 1) * f(J + j1 - j2) * f(J - j1 + j2) * f(j1 + j2 - J) \
        / f(j1 + j2 + J + 1)
    pref *= f(J + M) * f(J - M) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    kmin = max(0, round(j2 - J - m1), round(j1 + m2 - J))
    kmax = min(round(j1 + j2 - J), round(j1 - m1), round(j2 + m2))
    total = 0.0
    for k in range(kmin, kmax + 1):
        total += (-1.0) ** k / (
            f(k) * f(j1 + j2 - J - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
            * f(J - j2 + m1 + k) * f(J - j1 - m2 + k))
    return sqrt(pref) * total


def verify_operator_identity(n_particles, L, dim_cap=_DIM_CAP):
    """Max-norm residual of 4 S+ S- = -N_b + C2[u(n)] - C2[so(n)]/2.

    All four operators are built densely on the b-level Fock space truncated
    at ``n_particles`` bosons (the spectator singlet level fixes the total
    particle number and plays no role in the identity).  C2[u(n)] is
    assembled from uncoupled generator products, C2[so(n)] from the odd-rank
    coupled tensors, so the two sides share no code with the ladder-amplitude
    construction they validate.
    """
    N = n_particles
    level = Level.boson(L)
    n_modes = level.degeneracy
    total = sum(len(boson_sector(n_modes, k)) for k in range(N + 1))
    if total > dim_cap:
        raise DomainError(f"dense dimension {total} exceeds cap {dim_cap}")

    offset = {}
    k = 0
    for nb in range(N + 1):
        offset[nb] = k
        k += len(boson_sector(n_modes, nb))

    def a_mat(mode, nb):
        return annihilator("boson", n_modes, mode, nb)

    # S- on the truncated sum space
    sm = np.zeros((k, k))
    for nb in range(2, N + 1):
        blockm = pair_annihilator_matrix("boson", [level], 0, nb)
        sm[offset[nb - 2]:offset[nb - 2] + blockm.shape[0],
           offset[nb]:offset[nb] + blockm.shape[1]] += blockm
    sp = sm.T

    nb_op = np.zeros((k, k))
    for nb in range(N + 1):
        d = len(boson_sector(n_modes, nb))
        nb_op[offset[nb]:offset[nb] + d, offset[nb]:offset[nb] + d] = nb * np.eye(d)

    # u(n) generators E_{mm'} = b^dag_m b_{m'}
    def gen_E(m_idx, mp_idx):
        e = np.zeros((k, k))
        for nb in range(N + 1):
            if nb == 0 and m_idx != mp_idx:
                continue
            lo = a_mat(mp_idx, nb)       # nb -> nb-1
            if nb >= 1:
                up = a_mat(m_idx, nb).T  # nb-1 -> nb
                blk = up @ lo
                e[offset[nb]:offset[nb] + blk.shape[0],
                  offset[nb]:offset[nb] + blk.shape[1]] += blk
        return e

    E = {}
    for i in range(n_modes):
        for j in range(n_modes):
            E[(i, j)] = gen_E(i, j)
    c2un = np.zeros((k, k))
    for i in range(n_modes):
        for j in range(n_modes):
            c2un += E[(i, j)] @ E[(j, i)]

    # so(n) Casimir from odd-rank coupled tensors:
    # T^lam_mu = sum_{m m'} <L m L m'|lam mu> (-1)^(L - m') b^dag_m b_{-m'}
    ms = level.m_values
    idx_of = {m: i for i, m in enumerate(ms)}
    c2son = np.zeros((k, k))
    for lam in range(1, 2 * L + 1, 2):
        for mu in range(-lam, lam + 1):
            t = np.zeros((k, k))
            for m in ms:
                mp = mu - m
                if abs(mp) > L:
                    continue
                cg = clebsch_gordan(L, m, L, mp, lam, mu)
                if cg == 0.0:
                    continue
                t += cg * (-1.0) ** (L - mp) * E[(idx_of[m], idx_of[-mp])]
            tm = np.zeros((k, k))
            for m in ms:
                mp = -mu - m
                if abs(mp) > L:
                    continue
                cg = clebsch_gordan(L, m, L, mp, lam, -mu)
                if cg == 0.0:
                    continue
                tm += cg * (-1.0) ** (L - mp) * E[(idx_of[m], idx_of[-mp])]
            c2son += 4.0 * (-1.0) ** mu * (t @ tm)

    lhs = 4.0 * (sp @ sm)
    rhs = -nb_op + c2un - 0.5 * c2son
    # the identity is exact below the truncation edge; the top sector is
    # reached correctly too because S+ S- dips down before coming back
    return float(np.abs(lhs - rhs).max())

"""Conserved-excitation 3x3 blocks of the effective Hamiltonian.

The effective Hamiltonian of every configuration has the same shape::

    H_eff = H_0 + sum_i eps_i g_i (n_i sz_i - s_low_i)
                + sum_i g_i [ m_i f_i(n1, n2) s_up,low_i + h.c. ]

where ``i`` runs over the two transitions, ``m_i`` is the annihilator of the
mode driving transition ``i`` and ``sz_i = s_up,up - s_low,low``.  Matrix
elements are obtained by applying these terms to product states
``(level, n1, n2)``; the same engine feeds both :func:`build_block` and the
full-space operator assembled by :mod:`threelevel.oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateCubic, NotAnEigenvalue
from .model import TRANSITIONS, AtomKind, DerivedParams, SystemParams

State = tuple[int, int, int]  # (level, n1, n2), level 0-based

# (level, dn1, dn2) of the three triplet members relative to block (n1, n2).
TRIPLET_OFFSETS = {
    AtomKind.LAMBDA: ((0, 0, 0), (1, 1, 0), (2, 0, 1)),
    AtomKind.LADDER: ((0, 0, 0), (1, 1, 0), (2, 1, 1)),
    AtomKind.VEE: ((0, 0, 0), (1, 1, -1), (2, 1, 0)),
}

# Relative root separation below which a pair is solved by deflation.
CLUSTER_TOL = 1e-3


class NonlinearityPair(NamedTuple):
    f1: float
    f2: float


@dataclass(frozen=True)
class TripletBasis:
    """Three product states sharing both excitation numbers.

    A member that would carry a negative photon number is ``None``; this only
    happens for the middle V-type state of blocks with ``n2 = 0``.
    """

    kind: AtomKind
    n1: int
    n2: int
    states: tuple

    @property
    def present(self) -> tuple[bool, bool, bool]:
        return tuple(s is not None for s in self.states)


@dataclass(frozen=True)
class Block:
    basis: TripletBasis
    m: np.ndarray


@dataclass(frozen=True)
class BlockSpectrum:
    """Eigenpairs of one block.

    ``coeffs[L]`` holds the unit vector (a_l, b_l, c_l) belonging to
    ``mu[L]``; ``branch[L]`` is the cosine branch of the closed-form solution
    that produced the root and ``valid[L]`` is False only for the placeholder
    pair of a block with an absent member.
    """

    mu: np.ndarray
    coeffs: np.ndarray
    branch: np.ndarray
    valid: np.ndarray


def nonlinearity(kind: AtomKind, d: DerivedParams, n1, n2) -> NonlinearityPair:
    """Intensity-dependent deformation of the two couplings at (n1, n2).

    Accepts scalars or broadcastable arrays.
    """
    e1sq, e2sq = d.eps1 ** 2, d.eps2 ** 2
    if kind is AtomKind.LAMBDA:
        f1 = 1.0 - e1sq * n1 - 0.5 * e2sq * n2
        f2 = 1.0 - e2sq * n2 - 0.5 * e1sq * n1
    elif kind is AtomKind.VEE:
        f1 = 1.0 - e1sq * n1 - 0.5 * e2sq * (1 + n2)
        f2 = 1.0 - e2sq * n2 - 0.5 * e1sq * (1 + n1)
    else:
        f1 = 1.0 - e1sq * n1 - 0.5 * e2sq * n2
        f2 = 1.0 - 0.5 * e1sq * (1 + n1) - e2sq * n2
    return NonlinearityPair(f1, f2)


def triplet_basis(kind: AtomKind, n1: int, n2: int) -> TripletBasis:
    if n1 < 0 or n2 < 0:
        raise ValueError("block indices must be non-negative")
    states = []
    for level, d1, d2 in TRIPLET_OFFSETS[kind]:
        m1, m2 = n1 + d1, n2 + d2
        states.append((level, m1, m2) if m1 >= 0 and m2 >= 0 else None)
    return TripletBasis(kind, n1, n2, tuple(states))


def free_energy(p: SystemParams, level: int, n1: int, n2: int) -> float:
    return p.energies[level] + p.omega_f * n1 + p.omega_fp * n2


def apply_effective(kind: AtomKind, p: SystemParams, d: DerivedParams,
                    state: State) -> list[tuple[float, State]]:
    """Apply H_eff to one product state; returns (amplitude, state) pairs."""
    level, n1, n2 = state
    photons = (n1, n2)
    eps = d.eps
    diag = free_energy(p, level, n1, n2)
    for i, tr in enumerate(TRANSITIONS[kind]):
        if level == tr.upper:
            diag += eps[i] * p.couplings[i] * photons[tr.mode]
        elif level == tr.lower:
            diag += eps[i] * p.couplings[i] * (-photons[tr.mode] - 1)
    out = [(diag, state)]

    for i, tr in enumerate(TRANSITIONS[kind]):
        g = p.couplings[i]
        if level == tr.lower and photons[tr.mode] > 0:
            # absorb one photon: f is evaluated on the photon-rich side
            f = nonlinearity(kind, d, n1, n2)[i]
            k = photons[tr.mode]
            new = (tr.upper, n1 - 1, n2) if tr.mode == 0 else (tr.upper, n1, n2 - 1)
            out.append((g * f * math.sqrt(k), new))
        elif level == tr.upper:
            k = photons[tr.mode] + 1
            new = (tr.lower, n1 + 1, n2) if tr.mode == 0 else (tr.lower, n1, n2 + 1)
            f = nonlinearity(kind, d, new[1], new[2])[i]
            out.append((g * f * math.sqrt(k), new))
    return out


def build_block(kind: AtomKind, p: SystemParams, d: DerivedParams,
                n1: int, n2: int) -> Block:
    basis = triplet_basis(kind, n1, n2)
    index = {s: j for j, s in enumerate(basis.states) if s is not None}
    m = np.zeros((3, 3))
    for j, s in enumerate(basis.states):
        if s is None:
            continue
        for amp, target in apply_effective(kind, p, d, s):
            i = index.get(target)
            if i is not None:
                m[i, j] += amp
    return Block(basis, m)


def cubic_coefficients(m):
    """Coefficients (x1, x2, x3) of mu^3 + x1 mu^2 + x2 mu + x3 = 0.

    Works on a single 3x3 matrix or a stack of shape (..., 3, 3).
    """
    m = np.asarray(m, dtype=float)
    a, b, c = m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]
    x1 = -(a + b + c)
    # sum of principal 2x2 minors == (tr^2 - tr(m^2)) / 2
    x2 = (a * b - m[..., 0, 1] * m[..., 1, 0]) + (a * c - m[..., 0, 2] * m[..., 2, 0]) \
        + (b * c - m[..., 1, 2] * m[..., 2, 1])
    det = (a * (b * c - m[..., 1, 2] * m[..., 2, 1])
           - m[..., 0, 1] * (m[..., 1, 0] * c - m[..., 1, 2] * m[..., 2, 0])
           + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - b * m[..., 2, 0]))
    return x1, x2, -det


def cardano_solve(x1, x2, x3, return_branches=False):
    """Three real roots of the monic cubic via the trigonometric Cardano form.

    Roots are returned in ascending order along the last axis.  With
    ``return_branches`` the cosine branch index (0, 1, 2) of each sorted
    root is returned as well.
    """
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, x3)))
    p = x1 * x1 - 3.0 * x2
    floor = -1e-12 * np.maximum(1.0, x1 * x1)
    if np.any(p < floor):
        raise DegenerateCubic("cubic has complex roots (input matrix not symmetric?)")
    p = np.maximum(p, 0.0)
    num = 9.0 * x1 * x2 - 2.0 * x1 ** 3 - 27.0 * x3
    den = 2.0 * p ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
    theta = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
    branches = np.arange(3) * (2.0 * np.pi / 3.0)
    roots = (-x1 / 3.0)[..., None] + (2.0 / 3.0) * np.sqrt(p)[..., None] * np.cos(
        theta[..., None] + branches)
    order = np.argsort(roots, axis=-1, kind="stable")
    roots = np.take_along_axis(roots, order, axis=-1)
    if return_branches:
        return roots, order
    return roots


def _sign_fix(v):
    """Flip vectors so that the first component with |v_i| > 1e-12 is positive."""
    v = np.array(v, dtype=float)
    big = np.abs(v) > 1e-12
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(v, first[..., None], axis=-1)[..., 0]
    flip = np.where(lead < 0, -1.0, 1.0)
    return v * flip[..., None]


def eigen_coefficients(m, mu):
    """Unit eigenvector (a, b, c) of a symmetric block for eigenvalue ``mu``.

    The vector is the cross product of the two most independent rows of
    ``m - mu I``.  For the arrow- and tridiagonal blocks this is the usual
    ratio form (e.g. b/a = m01 / (mu - m11)) with the denominators cleared,
    so it stays finite when a denominator vanishes.  Broadcasts over leading
    axes.
    """
    m = np.asarray(m, dtype=float)
    mu = np.asarray(mu, dtype=float)
    shape = np.broadcast_shapes(m.shape[:-2], mu.shape)
    mm = np.broadcast_to(m, shape + (3, 3)).reshape(-1, 3, 3)
    r = mm - np.broadcast_to(mu, shape).reshape(-1)[:, None, None] * np.eye(3)

    cands = np.stack([
        np.cross(r[:, 0], r[:, 1]),
        np.cross(r[:, 0], r[:, 2]),
        np.cross(r[:, 1], r[:, 2]),
    ], axis=1)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    rows = np.arange(len(r))
    v = cands[rows, best]
    vn = norms[rows, best]
    for i in np.nonzero(vn == 0.0)[0]:
        # rank <= 1: any unit vector orthogonal to the dominant row will do
        row = r[i, np.argmax(np.linalg.norm(r[i], axis=-1))]
        v[i] = _orthogonal_unit(row) if np.any(row) else np.eye(3)[0]
        vn[i] = 1.0
    v = _sign_fix(v / vn[:, None])

    scale = np.linalg.norm(mm, axis=(-2, -1))
    resid = np.linalg.norm(np.einsum("kij,kj->ki", r, v), axis=-1)
    if np.any(resid > 1e-8 * scale):
        raise NotAnEigenvalue(f"residual {np.max(resid):.3g} exceeds 1e-8 * |m|")
    return v.reshape(shape + (3,))


def _orthogonal_unit(v):
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    e = np.eye(3)[np.argmin(np.abs(v))]
    u = e - (e @ v) * v
    return u / np.linalg.norm(u)


def _sym2_eigen(alpha, beta, gamma):
    """Ascending eigenpairs of [[alpha, beta], [beta, gamma]] by one rotation."""
    mean = 0.5 * (alpha + gamma)
    rad = math.hypot(0.5 * (alpha - gamma), beta)
    theta = 0.5 * math.atan2(2.0 * beta, alpha - gamma)
    c, s = math.cos(theta), math.sin(theta)
    return (mean - rad, mean + rad), (np.array([-s, c]), np.array([c, s]))


def _solve_cluster(b, roots, branch):
    """Redo a block whose two roots nearly coincide.

    The isolated root keeps its closed-form value and cross-product vector;
    the clustered pair is re-solved exactly as a 2x2 problem on the
    orthogonal complement, which keeps the pair orthonormal and accurate.
    """
    gaps = np.diff(roots)
    iso = 2 if gaps[0] < gaps[1] else 0
    pair = [0, 1] if iso == 2 else [1, 2]
    v = eigen_coefficients(b, roots[iso])
    u1 = _orthogonal_unit(v)
    u2 = np.cross(v, u1)
    bu1, bu2 = b @ u1, b @ u2
    (lo, hi), (w_lo, w_hi) = _sym2_eigen(u1 @ bu1, u1 @ bu2, u2 @ bu2)
    mu = np.empty(3)
    vecs = np.empty((3, 3))
    mu[iso], vecs[iso] = roots[iso], v
    mu[pair[0]], vecs[pair[0]] = lo, w_lo[0] * u1 + w_lo[1] * u2
    mu[pair[1]], vecs[pair[1]] = hi, w_hi[0] * u1 + w_hi[1] * u2
    return mu, _sign_fix(vecs), branch


def symmetric_eigen3(m):
    """Closed-form eigen-decomposition of a stack of real symmetric 3x3 matrices.

    Returns ``(mu, coeffs, branch)`` with ``mu`` ascending, ``coeffs[..., L, :]``
    the unit eigenvector of ``mu[..., L]`` and ``branch`` the Cardano branch
    indices.  The matrices are shifted by their mean diagonal and scaled to
    unit max-norm before the characteristic polynomial is formed.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    m = m.reshape(-1, 3, 3)
    shift = np.trace(m, axis1=-2, axis2=-1) / 3.0
    b = m - shift[:, None, None] * np.eye(3)
    # unit scale keeps the cubic coefficients clear of under/overflow
    scale = np.max(np.abs(b), axis=(-2, -1))
    flat = scale == 0.0
    b = b / np.where(flat, 1.0, scale)[:, None, None]
    roots, branch = cardano_solve(*cubic_coefficients(b), return_branches=True)
    spread = roots[:, 2] - roots[:, 0]
    min_gap = np.min(np.diff(roots, axis=-1), axis=-1)
    cluster = ~flat & (min_gap < CLUSTER_TOL * spread)
    easy = ~flat & ~cluster

    coeffs = np.empty_like(m)
    if np.any(easy):
        coeffs[easy] = eigen_coefficients(
            np.repeat(b[easy], 3, axis=0), roots[easy].reshape(-1)).reshape(-1, 3, 3)
    for i in np.nonzero(cluster)[0]:
        roots[i], coeffs[i], branch[i] = _solve_cluster(b[i], roots[i], branch[i])
    # a vanishing b means a multiple of the identity
    coeffs[flat] = np.eye(3)
    roots[flat] = 0.0
    mu = roots * scale[:, None] + shift[:, None]
    if single:
        return mu[0], coeffs[0], branch[0]
    return mu, coeffs, branch


def _solve_block(block: Block):
    present = block.basis.present
    if all(present):
        mu, coeffs, branch = symmetric_eigen3(block.m)
        return mu, coeffs, branch, np.ones(3, dtype=bool)
    # one absent member: exact 2x2 problem on the remaining pair, the absent
    # state is a placeholder eigenpair (mu = 0) excluded from the dynamics
    keep = [i for i in range(3) if present[i]]
    gone = present.index(False)
    sub = block.m[np.ix_(keep, keep)]
    (lo, hi), (w_lo, w_hi) = _sym2_eigen(sub[0, 0], sub[0, 1], sub[1, 1])
    pairs = []
    for val, w in ((lo, w_lo), (hi, w_hi)):
        v = np.zeros(3)
        v[keep] = w
        pairs.append((val, _sign_fix(v), True))
    pairs.append((0.0, np.eye(3)[gone], False))
    pairs.sort(key=lambda t: t[0])
    mu = np.array([t[0] for t in pairs])
    coeffs = np.array([t[1] for t in pairs])
    valid = np.array([t[2] for t in pairs])
    return mu, coeffs, np.arange(3), valid


def block_spectrum(kind: AtomKind, p: SystemParams, d: DerivedParams,
                   n1: int, n2: int) -> BlockSpectrum:
    mu, coeffs, branch, valid = _solve_block(build_block(kind, p, d, n1, n2))
    return BlockSpectrum(mu, coeffs, branch, valid)


@dataclass(frozen=True)
class SpectrumGrid:
    """Block spectra for every (n1, n2) with n1 <= n_max1, n2 <= n_max2."""

    kind: AtomKind
    mu: np.ndarray       # (N1, N2, 3)
    coeffs: np.ndarray   # (N1, N2, 3, 3); [..., L, slot]
    valid: np.ndarray    # (N1, N2, 3)
    f1: np.ndarray       # (N1, N2) deformation at the block index
    f2: np.ndarray
    omega_f: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.mu.shape[:2]

    def block(self, n1: int, n2: int) -> BlockSpectrum:
        return BlockSpectrum(self.mu[n1, n2], self.coeffs[n1, n2],
                             np.arange(3), self.valid[n1, n2])


def spectrum_grid(kind: AtomKind, p: SystemParams, d: DerivedParams) -> SpectrumGrid:
    n1s, n2s = p.n_max1 + 1, p.n_max2 + 1
    mats = np.empty((n1s, n2s, 3, 3))
    full = np.ones((n1s, n2s), dtype=bool)
    partial = []
    for n1 in range(n1s):
        for n2 in range(n2s):
            blk = build_block(kind, p, d, n1, n2)
            mats[n1, n2] = blk.m
            if not all(blk.basis.present):
                full[n1, n2] = False
                partial.append(blk)

    mu = np.zeros((n1s, n2s, 3))
    coeffs = np.zeros((n1s, n2s, 3, 3))
    valid = np.ones((n1s, n2s, 3), dtype=bool)
    if np.any(full):
        mu_f, co_f, _ = symmetric_eigen3(mats[full])
        mu[full], coeffs[full] = mu_f, co_f
    for blk in partial:
        i, j = blk.basis.n1, blk.basis.n2
        mu[i, j], coeffs[i, j], _, valid[i, j] = _solve_block(blk)

    n1g, n2g = np.meshgrid(np.arange(n1s), np.arange(n2s), indexing="ij")
    f = nonlinearity(kind, d, n1g, n2g)
    return SpectrumGrid(kind, mu, coeffs, valid,
                        np.asarray(f.f1, dtype=float), np.asarray(f.f2, dtype=float), p.omega_f)

"""Exact reference in the truncated product space |level> x |n1> x |n2>.

Everything here is dense linear algebra on the full Hamiltonian, built
independently of the closed-form block solution (Kronecker products of
truncated ladder matrices), so it can adjudicate the analytic pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import coherent_weights
from .effective import TRIPLET_OFFSETS, SpectrumGrid, apply_effective
from .errors import ConvergenceFailure, DimensionTooLarge, NoMatch
from .model import (EXCITATION_CHARGES, TRANSITIONS, UPPER_LEVELS, AtomKind,
                    DerivedParams, SystemParams)

MAX_DIM = 5000
# Matrices up to this size are diagonalised by the in-house Jacobi solver.
JACOBI_MAX_DIM = 64
# Triplet members closer than this to the cutoff are left out of comparisons.
EDGE_MARGIN = 2


@dataclass(frozen=True)
class FockBasis:
    n_max1: int
    n_max2: int

    def __post_init__(self):
        if self.n_max1 < 0 or self.n_max2 < 0:
            raise ValueError("n_max must be non-negative")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (3, self.n_max1 + 1, self.n_max2 + 1)

    @property
    def dim(self) -> int:
        return 3 * (self.n_max1 + 1) * (self.n_max2 + 1)

    def contains(self, level: int, n1: int, n2: int) -> bool:
        return 0 <= level < 3 and 0 <= n1 <= self.n_max1 and 0 <= n2 <= self.n_max2

    def index(self, level: int, n1: int, n2: int) -> int:
        if not self.contains(level, n1, n2):
            raise IndexError(f"state {(level, n1, n2)} outside the basis")
        return (level * (self.n_max1 + 1) + n1) * (self.n_max2 + 1) + n2

    def state(self, idx: int) -> tuple[int, int, int]:
        if not 0 <= idx < self.dim:
            raise IndexError(idx)
        rest, n2 = divmod(idx, self.n_max2 + 1)
        level, n1 = divmod(rest, self.n_max1 + 1)
        return (level, n1, n2)

    def labels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Level, n1 and n2 of every flat index."""
        grids = np.meshgrid(*(np.arange(k) for k in self.shape), indexing="ij")
        return tuple(g.reshape(-1) for g in grids)

    def check_size(self):
        if self.dim > MAX_DIM:
            raise DimensionTooLarge(f"dimension {self.dim} exceeds {MAX_DIM}")


@dataclass(frozen=True)
class DenseOperator:
    basis: FockBasis
    entries: np.ndarray

    def is_hermitian(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.conj().T))


def annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def _transition(upper: int, lower: int) -> np.ndarray:
    """Atomic operator |upper><lower|."""
    s = np.zeros((3, 3))
    s[upper, lower] = 1.0
    return s


def _mode_ops(basis: FockBasis):
    a = annihilation(basis.n_max1)
    b = annihilation(basis.n_max2)
    return (np.kron(a, np.eye(basis.n_max2 + 1)), np.kron(np.eye(basis.n_max1 + 1), b))


def _free_diagonal(p: SystemParams, basis: FockBasis) -> np.ndarray:
    level, n1, n2 = basis.labels()
    energies = np.asarray(p.energies)
    # same operation order as the block builder, so RWA blocks agree bitwise
    return energies[level] + p.omega_f * n1 + p.omega_fp * n2


def build_full_hamiltonian(kind: AtomKind, p: SystemParams, include_crt: bool,
                           basis: FockBasis | None = None) -> DenseOperator:
    """Untransformed H0 + H1 (+ counter-rotating H2) in the truncated space."""
    basis = basis or FockBasis(p.n_max1, p.n_max2)
    basis.check_size()
    modes = _mode_ops(basis)
    raising = np.zeros((basis.dim, basis.dim))
    for i, tr in enumerate(TRANSITIONS[kind]):
        m = modes[tr.mode]
        up = _transition(tr.upper, tr.lower)
        raising += p.couplings[i] * np.kron(up, m)          # absorb and excite
        if include_crt:
            raising += p.couplings[i] * np.kron(up, m.T)    # emit and excite
    h = raising + raising.T
    h[np.diag_indices(basis.dim)] = _free_diagonal(p, basis)
    return DenseOperator(basis, h.astype(complex))


def build_effective_full(kind: AtomKind, p: SystemParams, d: DerivedParams,
                         basis: FockBasis | None = None) -> DenseOperator:
    """Effective Hamiltonian assembled state by state with the block engine."""
    basis = basis or FockBasis(p.n_max1, p.n_max2)
    basis.check_size()
    h = np.zeros((basis.dim, basis.dim))
    for j in range(basis.dim):
        for amp, target in apply_effective(kind, p, d, basis.state(j)):
            if basis.contains(*target):
                h[basis.index(*target), j] += amp
    upper = np.triu(h, 1)
    h = upper + upper.T + np.diag(np.diag(h))
    return DenseOperator(basis, h.astype(complex))


def excitation_operators(kind: AtomKind, basis: FockBasis) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of the two conserved excitation numbers N_a and N_b."""
    level, n1, n2 = basis.labels()
    qa, qb = (np.asarray(q) for q in EXCITATION_CHARGES[kind])
    return (n1 + qa[level]).astype(float), (n2 + qb[level]).astype(float)


def interior_mask(basis: FockBasis, margin: int = 1) -> np.ndarray:
    _, n1, n2 = basis.labels()
    return (n1 <= basis.n_max1 - margin) & (n2 <= basis.n_max2 - margin)


def commutator_norm(kind: AtomKind, h: DenseOperator, interior_only: bool = True) -> float:
    """Largest Frobenius norm of [N, H] over both excitation numbers."""
    worst = 0.0
    for n in excitation_operators(kind, h.basis):
        c = n[:, None] * h.entries - h.entries * n[None, :]
        if interior_only:
            keep = interior_mask(h.basis)
            c = c[np.ix_(keep, keep)]
        worst = max(worst, float(np.linalg.norm(c)))
    return worst


class Eigenpairs(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray  # columns


def jacobi_eigh(a, max_sweeps: int = 50, tol: float = 1e-15) -> Eigenpairs:
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        return _sorted(np.real(np.diag(a)).copy(), v)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            return _sorted(np.real(np.diag(a)).copy(), v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                # make a_pq real and positive, then rotate as in the real case
                phase = apq / r
                a[:, q] *= np.conj(phase)
                a[q, :] *= phase
                v[:, q] *= np.conj(phase)
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * rp - s * rq, s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def _sorted(values, vectors) -> Eigenpairs:
    order = np.argsort(values, kind="stable")
    return Eigenpairs(values[order], vectors[:, order])


def eigendecompose(h, method: str = "auto") -> Eigenpairs:
    """Eigenvalues ascending with orthonormal eigenvector columns.

    ``method`` is "jacobi", "lapack" or "auto" (Jacobi for small matrices).
    """
    m = h.entries if isinstance(h, DenseOperator) else np.asarray(h)
    if method == "auto":
        method = "jacobi" if m.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(m)
    if method == "lapack":
        values, vectors = np.linalg.eigh(m)
        return Eigenpairs(values, vectors)
    raise ValueError(f"unknown method {method!r}")


def exact_evolve(h, psi0, t: float) -> np.ndarray:
    """psi(t) = V exp(-i Lambda t) V^dag psi0; ``h`` is an operator or its Eigenpairs."""
    eig = h if isinstance(h, Eigenpairs) else eigendecompose(h)
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalised")
    coeff = eig.vectors.conj().T @ psi0
    return eig.vectors @ (np.exp(-1j * eig.values * t) * coeff)


def initial_state(basis: FockBasis, alpha1: complex, alpha2: complex,
                  n_weights: tuple[int, int] | None = None) -> np.ndarray:
    """Normalised |1> x |alpha1> x |alpha2>, Fock weights cut at ``n_weights``."""
    k1, k2 = n_weights or (basis.n_max1, basis.n_max2)
    if k1 > basis.n_max1 or k2 > basis.n_max2:
        raise ValueError("weight truncation exceeds the basis")
    psi = np.zeros(basis.shape, dtype=complex)
    psi[0, : k1 + 1, : k2 + 1] = np.outer(coherent_weights(alpha1, k1), coherent_weights(alpha2, k2))
    psi = psi.reshape(-1)
    return psi / np.linalg.norm(psi)


def inversion(kind: AtomKind, basis: FockBasis, psi) -> float:
    pops = (np.abs(np.asarray(psi)) ** 2).reshape(basis.shape).sum(axis=(1, 2))
    pops = pops / pops.sum()
    upper = UPPER_LEVELS[kind]
    return float(sum(pops[l] if l in upper else -pops[l] for l in range(3)))


def mode_moments(basis: FockBasis, psi, mode: int) -> tuple[float, float]:
    probs = (np.abs(np.asarray(psi)) ** 2).reshape(basis.shape)
    probs = probs / probs.sum()
    marginal = probs.sum(axis=(0, 2 - mode))
    n = np.arange(marginal.size, dtype=float)
    return float(np.dot(n, marginal)), float(np.dot(n * n, marginal))


def generator_matrix(kind: AtomKind, d: DerivedParams, basis: FockBasis) -> np.ndarray:
    """Anti-Hermitian S = sum_i eps_i (m_i^dag s_up,low - m_i s_low,up)."""
    modes = _mode_ops(basis)
    s = np.zeros((basis.dim, basis.dim))
    for i, tr in enumerate(TRANSITIONS[kind]):
        term = d.eps[i] * np.kron(_transition(tr.upper, tr.lower), modes[tr.mode].T)
        s += term - term.T
    return s


def embed_triplet(kind: AtomKind, basis: FockBasis, n1: int, n2: int, coeffs) -> np.ndarray:
    vec = np.zeros(basis.dim)
    for (level, d1, d2), c in zip(TRIPLET_OFFSETS[kind], coeffs):
        if c != 0.0:
            vec[basis.index(level, n1 + d1, n2 + d2)] = c
    return vec


@dataclass(frozen=True)
class MatchRow:
    n1: int
    n2: int
    branch: int
    analytic: float
    exact: float
    abs_gap: float
    rel_gap: float


@dataclass(frozen=True)
class MatchReport:
    rows: tuple

    @property
    def max_abs_gap(self) -> float:
        return max((r.abs_gap for r in self.rows), default=0.0)

    @property
    def max_rel_gap(self) -> float:
        return max((r.rel_gap for r in self.rows), default=0.0)


def _interior_blocks(kind: AtomKind, grid: SpectrumGrid, basis: FockBasis, max_sum):
    for n1 in range(grid.shape[0]):
        for n2 in range(grid.shape[1]):
            if max_sum is not None and n1 + n2 > max_sum:
                continue
            inside = all(
                n1 + d1 >= 0 and n2 + d2 >= 0
                and n1 + d1 <= basis.n_max1 - EDGE_MARGIN
                and n2 + d2 <= basis.n_max2 - EDGE_MARGIN
                for _, d1, d2 in TRIPLET_OFFSETS[kind]
            )
            if inside:
                yield n1, n2


def _clusters(values, tol):
    """Group ascending eigenvalues closer than ``tol`` into index ranges."""
    bounds = [0]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol:
            bounds.append(i)
    bounds.append(len(values))
    return [(bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1)]


def match_spectra(kind: AtomKind, grid: SpectrumGrid, exact: Eigenpairs, d: DerivedParams,
                  basis: FockBasis, max_sum: int | None = None) -> MatchReport:
    """Pair every interior analytic eigenvalue with its exact counterpart.

    The analytic eigenvector is carried to the full space with the first-order
    back-transform; the partner is the (possibly degenerate) exact eigenspace
    holding more than half of its weight.
    """
    s = generator_matrix(kind, d, basis)
    back = np.eye(basis.dim) - s
    spread = max(1.0, float(np.max(np.abs(exact.values))))
    groups = _clusters(exact.values, 1e-9 * spread)
    rows = []
    for n1, n2 in _interior_blocks(kind, grid, basis, max_sum):
        for branch in range(3):
            if not grid.valid[n1, n2, branch]:
                continue
            phi = back @ embed_triplet(kind, basis, n1, n2, grid.coeffs[n1, n2, branch])
            phi /= np.linalg.norm(phi)
            weight = np.abs(exact.vectors.conj().T @ phi) ** 2
            mu = float(grid.mu[n1, n2, branch])
            best = None
            for lo, hi in groups:
                if weight[lo:hi].sum() > 0.5:
                    centre = float(np.mean(exact.values[lo:hi]))
                    if best is None or abs(centre - mu) < abs(best - mu):
                        best = centre
            if best is None:
                raise NoMatch(f"no exact eigenvector matches block ({n1}, {n2}) branch {branch}")
            gap = abs(mu - best)
            rows.append(MatchRow(n1, n2, branch, mu, best, gap, gap / abs(best) if best else np.inf))
    return MatchReport(tuple(rows))

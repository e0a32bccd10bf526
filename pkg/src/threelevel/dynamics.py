"""Coherent initial state, first-order dressed eigenvectors and time evolution.

An eigenvector of the full Hamiltonian is approximated by
``(1 - S) |phi_eff>`` where ``S = sum_i eps_i (m_i^dag s_up,low - m_i s_low,up)``
generates the counter-rotating correction.  ``S`` maps every triplet member
of block ``n`` onto a member of a neighbouring block ``n +/- 2 e_mode``; these
"leaks" are tabulated once per configuration from the transition map and are
all the dynamics needs beyond the block spectra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .effective import TRIPLET_OFFSETS, BlockSpectrum, SpectrumGrid
from .errors import EmptyState
from .model import TRANSITIONS, AtomKind, DerivedParams, SystemParams


class Leak(NamedTuple):
    """First-order term ``sign * eps[eps_index] * sqrt(n_mode + k0)``.

    It carries triplet slot ``src`` of block ``n`` to slot ``dst`` of block
    ``n + shift``; ``n_mode`` is the source block index of ``mode``.
    """

    src: int
    dst: int
    shift: tuple[int, int]
    eps_index: int
    sign: int
    mode: int
    k0: int


def _build_leaks(kind: AtomKind) -> tuple[Leak, ...]:
    offsets = TRIPLET_OFFSETS[kind]
    slot_of_level = {lvl: s for s, (lvl, _, _) in enumerate(offsets)}
    leaks = []
    for s, (lvl, d1, d2) in enumerate(offsets):
        for i, tr in enumerate(TRANSITIONS[kind]):
            here = (d1, d2)[tr.mode]
            if lvl == tr.upper:
                sign, k0, step, new = +1, here, -1, tr.lower
            elif lvl == tr.lower:
                sign, k0, step, new = -1, here + 1, +1, tr.upper
            else:
                continue
            t = [d1, d2]
            t[tr.mode] += step
            dst = slot_of_level[new]
            _, e1, e2 = offsets[dst]
            leaks.append(Leak(s, dst, (t[0] - e1, t[1] - e2), i, sign, tr.mode, k0))
    return tuple(leaks)


LEAKS = {kind: _build_leaks(kind) for kind in AtomKind}


@dataclass(frozen=True)
class CoherentWeights:
    p1: np.ndarray
    p2: np.ndarray

    @property
    def grid(self) -> np.ndarray:
        """Initial amplitude P_{n1} P_{n2} of |1, n1, n2>."""
        return np.outer(self.p1, self.p2)


def coherent_weights(alpha: complex, n_max: int) -> np.ndarray:
    """Fock amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n <= n_max."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    alpha = complex(alpha)
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(n_max):
        out[n + 1] = out[n] * alpha / np.sqrt(n + 1)
    return out


def initial_weights(p: SystemParams) -> CoherentWeights:
    return CoherentWeights(coherent_weights(p.alpha1, p.n_max1),
                           coherent_weights(p.alpha2, p.n_max2))


@dataclass(frozen=True)
class EvolvedState:
    """Triplet amplitudes at time ``t`` (units of 1/omega_f).

    ``amp[s, n1, n2]`` belongs to slot ``s`` of block (n1, n2); slots 0, 1, 2
    are the A, B and C amplitudes.
    """

    kind: AtomKind
    t: float
    amp: np.ndarray
    norm_corr: float

    @property
    def amp_a(self) -> np.ndarray:
        return self.amp[0]

    @property
    def amp_b(self) -> np.ndarray:
        return self.amp[1]

    @property
    def amp_c(self) -> np.ndarray:
        return self.amp[2]


def _shifted(a, shift):
    """out[n] = a[n + shift] with zeros outside the grid (last two axes)."""
    out = np.zeros_like(a)
    d1, d2 = shift
    n1s, n2s = a.shape[-2:]
    src1 = slice(max(d1, 0), n1s + min(d1, 0))
    dst1 = slice(max(-d1, 0), n1s - max(d1, 0))
    src2 = slice(max(d2, 0), n2s + min(d2, 0))
    dst2 = slice(max(-d2, 0), n2s - max(d2, 0))
    out[..., dst1, dst2] = a[..., src1, src2]
    return out


def _leak_factor(leak: Leak, d: DerivedParams, shape):
    n = np.arange(shape[leak.mode]) + leak.k0
    root = np.sqrt(np.maximum(n, 0))
    root = root[:, None] if leak.mode == 0 else root[None, :]
    return leak.sign * d.eps[leak.eps_index] * np.broadcast_to(root, shape)


def lambda_grid(grid: SpectrumGrid, d: DerivedParams, w: CoherentWeights) -> np.ndarray:
    """Overlaps <phi_L(n)|psi(0)> for every block, shape (N1, N2, 3)."""
    psi0 = w.grid
    v = grid.coeffs
    lam = v[..., 0] * psi0[..., None]
    for leak in LEAKS[grid.kind]:
        if leak.dst != 0:
            continue
        fac = _leak_factor(leak, d, grid.shape)
        lam = lam + (fac * _shifted(psi0, leak.shift))[..., None] * v[..., leak.src]
    return np.where(grid.valid, lam, 0.0)


def lambda_weights(spec: BlockSpectrum, kind: AtomKind, d: DerivedParams,
                   w: CoherentWeights, n1: int, n2: int) -> np.ndarray:
    """Overlaps <phi_L|psi(0)> for the single block (n1, n2)."""
    psi0 = w.grid

    def amp(m1, m2):
        if 0 <= m1 < psi0.shape[0] and 0 <= m2 < psi0.shape[1]:
            return psi0[m1, m2]
        return 0.0

    lam = spec.coeffs[:, 0] * amp(n1, n2)
    for leak in LEAKS[kind]:
        if leak.dst != 0:
            continue
        k = (n1, n2)[leak.mode] + leak.k0
        fac = leak.sign * d.eps[leak.eps_index] * np.sqrt(max(k, 0))
        lam = lam + fac * spec.coeffs[:, leak.src] * amp(n1 + leak.shift[0], n2 + leak.shift[1])
    return np.where(spec.valid, lam, 0.0)


def norm_correction(amp) -> float:
    """N(t) = (sum |A|^2 + |B|^2 + |C|^2)^(-1/2); accepts an EvolvedState or raw grids."""
    if isinstance(amp, EvolvedState):
        amp = amp.amp
    total = float(np.sum(np.abs(amp) ** 2))
    if total < 1e-300:
        raise EmptyState("state vector vanished")
    return total ** -0.5


class Propagator:
    """Time-independent pieces of the evolution, prepared once per run."""

    def __init__(self, grid: SpectrumGrid, d: DerivedParams, w: CoherentWeights):
        self.grid = grid
        self.d = d
        self.lam = lambda_grid(grid, d, w)
        lam0 = np.where(grid.valid, grid.coeffs[..., 0] * w.grid[..., None], 0.0)
        self._leaks = [(leak, _leak_factor(leak, d, grid.shape), lam0 * grid.coeffs[..., leak.src])
                       for leak in LEAKS[grid.kind] if d.eps[leak.eps_index] != 0.0]

    def amplitudes(self, tau: float) -> np.ndarray:
        grid = self.grid
        phase = np.exp(-1j * grid.mu * (tau / grid.omega_f))
        weighted = phase * self.lam
        amp = np.einsum("abl,abls->sab", weighted, grid.coeffs)
        for leak, fac, src in self._leaks:
            moved = fac * np.sum(phase * src, axis=-1)
            amp[leak.dst] += _shifted(moved, (-leak.shift[0], -leak.shift[1]))
        return amp

    def __call__(self, tau: float) -> EvolvedState:
        amp = self.amplitudes(tau)
        return EvolvedState(self.grid.kind, tau / self.grid.omega_f, amp, norm_correction(amp))


def evolve(grid: SpectrumGrid, d: DerivedParams, w: CoherentWeights, tau: float) -> EvolvedState:
    """State at scaled time ``tau = omega_f t``, to first order in eps, unnormalised."""
    return Propagator(grid, d, w)(tau)

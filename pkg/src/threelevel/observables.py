"""Population inversion, photon statistics and time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EvolvedState, Propagator, initial_weights
from .effective import TRIPLET_OFFSETS, spectrum_grid
from .errors import UndefinedForVacuum
from .model import UPPER_LEVELS, AtomKind, DerivedParams, SystemParams

MODES = {"a": 0, "b": 1, 0: 0, 1: 1}


def _mode_index(mode) -> int:
    try:
        return MODES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None


def _populations(s: EvolvedState) -> np.ndarray:
    """Normalised probability of each triplet slot, shape (3, N1, N2)."""
    return s.norm_corr ** 2 * np.abs(s.amp) ** 2


def population_inversion(s: EvolvedState) -> float:
    """Upper-level minus lower-level population."""
    pops = _populations(s).sum(axis=(1, 2))
    upper = UPPER_LEVELS[s.kind]
    signs = [1.0 if lvl in upper else -1.0 for lvl, _, _ in TRIPLET_OFFSETS[s.kind]]
    return float(np.dot(signs, pops))


def photon_counts(kind: AtomKind, shape, mode) -> np.ndarray:
    """Photon number of ``mode`` carried by each triplet slot, shape (3, N1, N2)."""
    m = _mode_index(mode)
    n = np.arange(shape[m])
    n = n[:, None] if m == 0 else n[None, :]
    return np.stack([np.broadcast_to(n + off[1 + m], shape) for off in TRIPLET_OFFSETS[kind]])


def photon_moments(s: EvolvedState, mode) -> tuple[float, float]:
    """(<n>, <n^2>) of one field mode."""
    pops = _populations(s)
    counts = photon_counts(s.kind, pops.shape[1:], mode).astype(float)
    return float(np.sum(counts * pops)), float(np.sum(counts ** 2 * pops))


def mandel_from_moments(mean: float, second: float) -> float:
    if mean <= 1e-12:
        raise UndefinedForVacuum("Mandel Q is undefined for a field with no photons")
    return (second - mean ** 2) / mean - 1.0


def mandel_q(s: EvolvedState, mode) -> float:
    return mandel_from_moments(*photon_moments(s, mode))


@dataclass(frozen=True)
class TimeSeries:
    tau: np.ndarray
    w: np.ndarray
    q_a: np.ndarray
    q_b: np.ndarray
    norm: np.ndarray


def _safe_q(s, mode) -> float:
    try:
        return mandel_q(s, mode)
    except UndefinedForVacuum:
        return float("nan")


def time_series(kind: AtomKind, p: SystemParams, d: DerivedParams, tau_grid) -> TimeSeries:
    """Evolve once per scaled time; Q of an empty mode is reported as NaN."""
    tau = np.asarray(tau_grid, dtype=float).reshape(-1)
    grid = spectrum_grid(kind, p, d)
    prop = Propagator(grid, d, initial_weights(p))
    w, qa, qb, norm = (np.empty_like(tau) for _ in range(4))
    for i, t in enumerate(tau):
        s = prop(t)
        w[i] = population_inversion(s)
        qa[i] = _safe_q(s, "a")
        qb[i] = _safe_q(s, "b")
        norm[i] = s.norm_corr
    return TimeSeries(tau, w, qa, qb, norm)

"""Physical parameters, configuration topology and perturbation constants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import DegenerateTransition, ThreePhotonResonance

# Perturbation theory is flagged as unreliable above this value of eps.
EPS_WARN = 0.1
# Relative margin (in units of omega_f) for the three-photon resonance check.
RESONANCE_MARGIN = 1e-6
# Largest discarded coherent probability accepted by validate.  At this level
# the truncation biases the Mandel Q of a coherent input by less than 1e-6.
TAIL_WARN = 1e-9


class AtomKind(enum.Enum):
    LAMBDA = "lambda"
    VEE = "vee"
    LADDER = "ladder"

    @classmethod
    def parse(cls, text: str) -> "AtomKind":
        key = text.strip().lower()
        aliases = {
            "lambda": cls.LAMBDA, "λ": cls.LAMBDA, "l": cls.LAMBDA,
            "vee": cls.VEE, "v": cls.VEE,
            "ladder": cls.LADDER, "xi": cls.LADDER, "ξ": cls.LADDER,
            "cascade": cls.LADDER,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown atom kind {text!r}") from None


class Transition(NamedTuple):
    """Dipole-allowed transition; levels are 0-based (level 1 -> 0)."""

    upper: int
    lower: int
    mode: int  # 0 = mode a, 1 = mode b


# Index 0 of each tuple is driven by mode a, index 1 by mode b.
TRANSITIONS = {
    AtomKind.LAMBDA: (Transition(0, 1, 0), Transition(0, 2, 1)),
    AtomKind.LADDER: (Transition(0, 1, 0), Transition(1, 2, 1)),
    AtomKind.VEE: (Transition(0, 2, 0), Transition(1, 2, 1)),
}

# Per-level contribution to the two conserved excitation numbers
# N_a = n1 + q_a[level] and N_b = n2 + q_b[level] of the RWA dynamics.
EXCITATION_CHARGES = {
    AtomKind.LAMBDA: ((1, 0, 1), (1, 1, 0)),
    AtomKind.LADDER: ((1, 0, 0), (1, 1, 0)),
    AtomKind.VEE: ((1, 0, 0), (0, 1, 0)),
}

# Levels counted as "upper" by the population inversion.
UPPER_LEVELS = {
    AtomKind.LAMBDA: (0,),
    AtomKind.LADDER: (0,),
    AtomKind.VEE: (0, 1),
}


@dataclass(frozen=True)
class SystemParams:
    """Raw physical inputs with hbar = 1; energies share the unit of omega_f."""

    e1: float
    e2: float
    e3: float
    g1: float
    g2: float
    omega_f: float = 1.0
    omega_fp: float = 1.0
    alpha1: complex = 0j
    alpha2: complex = 0j
    n_max1: int = 0
    n_max2: int = 0

    @property
    def energies(self) -> tuple[float, float, float]:
        return (self.e1, self.e2, self.e3)

    @property
    def omegas(self) -> tuple[float, float]:
        return (self.omega_f, self.omega_fp)

    @property
    def couplings(self) -> tuple[float, float]:
        return (self.g1, self.g2)

    @property
    def alphas(self) -> tuple[complex, complex]:
        return (complex(self.alpha1), complex(self.alpha2))

    @property
    def n_max(self) -> tuple[int, int]:
        return (self.n_max1, self.n_max2)

    def shifted(self, c: float) -> "SystemParams":
        """Copy with every level energy offset by ``c``."""
        return replace(self, e1=self.e1 + c, e2=self.e2 + c, e3=self.e3 + c)


@dataclass(frozen=True)
class DerivedParams:
    """Perturbation bookkeeping for one configuration.

    ``wtilde_*`` and ``delta_*`` refer to the transition driven by mode a
    (suffix ``a``) and mode b (suffix ``b``).
    """

    kind: AtomKind
    eps1: float
    eps2: float
    wtilde_a: float
    wtilde_b: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    delta_a: float
    delta_b: float

    @property
    def eps(self) -> tuple[float, float]:
        return (self.eps1, self.eps2)


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str

    def __str__(self):
        return f"{self.severity.value}: {self.code}: {self.message}"


def _transition_gaps(p: SystemParams, kind: AtomKind):
    energies = p.energies
    for tr in TRANSITIONS[kind]:
        yield tr, energies[tr.upper] - energies[tr.lower], p.omegas[tr.mode]


def derive_params(p: SystemParams, kind: AtomKind, rwa: bool = False) -> DerivedParams:
    """Compute eps, partial frequencies, beta, gamma and detunings.

    With ``rwa=True`` the counter-rotating corrections are switched off:
    eps, beta and gamma are zero while frequencies and detunings are kept.
    """
    wt, det, gaps = [], [], []
    for tr, gap, omega in _transition_gaps(p, kind):
        w = 0.5 * (gap + omega)
        if w == 0.0 or not math.isfinite(w):
            raise DegenerateTransition(
                f"partial frequency of transition {tr.upper + 1}<->{tr.lower + 1} vanishes"
            )
        if not rwa and abs(gap - 3.0 * omega) < RESONANCE_MARGIN * p.omega_f:
            raise ThreePhotonResonance(
                f"transition {tr.upper + 1}<->{tr.lower + 1} is three-photon resonant"
            )
        wt.append(w)
        det.append(gap - omega)
        gaps.append(gap)

    if rwa:
        eps = (0.0, 0.0)
    else:
        eps = (p.g1 / (2.0 * wt[0]), p.g2 / (2.0 * wt[1]))
    beta = tuple(eps[i] * p.couplings[i] / (2.0 * p.omegas[i]) for i in range(2))
    if rwa:
        gamma = (0.0, 0.0)
    else:
        gamma = (
            (2 * eps[0] ** 2 * wt[0] + eps[1] ** 2 * wt[1])
            * p.g1 / (p.omegas[0] * (gaps[0] - 3 * p.omegas[0])),
            (2 * eps[1] ** 2 * wt[1] + eps[0] ** 2 * wt[0])
            * p.g2 / (p.omegas[1] * (gaps[1] - 3 * p.omegas[1])),
        )
    return DerivedParams(
        kind=kind,
        eps1=eps[0], eps2=eps[1],
        wtilde_a=wt[0], wtilde_b=wt[1],
        beta1=beta[0], beta2=beta[1],
        gamma1=gamma[0], gamma2=gamma[1],
        delta_a=det[0], delta_b=det[1],
    )


def min_truncation(alpha: complex) -> int:
    """Smallest n_max that contains a coherent state's tail (mean + 6 sigma)."""
    mean = abs(alpha) ** 2
    return math.ceil(mean + 6.0 * math.sqrt(mean))


def default_truncation(alpha: complex) -> int:
    """Smallest n_max accepted by validate: the 6-sigma bound, extended until
    the discarded tail mass is at most TAIL_WARN."""
    mean = abs(alpha) ** 2
    n = min_truncation(alpha)
    while poisson_tail(mean, n) > TAIL_WARN:
        n += 1
    return n


def poisson_tail(mean: float, n_max: int) -> float:
    """Probability mass of a Poisson(mean) distribution above ``n_max``."""
    if mean == 0.0:
        return 0.0
    # sum the tail directly so tiny masses are not lost to cancellation
    log_term = -mean + (n_max + 1) * math.log(mean) - math.lgamma(n_max + 2)
    term = math.exp(log_term)
    total = 0.0
    n = n_max + 1
    while term > 1e-300 and (term > 1e-18 * total or n < mean):
        total += term
        n += 1
        term *= mean / n
    return min(1.0, total)


def validate(p: SystemParams, kind: AtomKind, rwa: bool = False) -> list[Diagnostic]:
    """Check parameters; never raises, all findings are returned."""
    out: list[Diagnostic] = []

    def err(code, msg):
        out.append(Diagnostic(Severity.ERROR, code, msg))

    def warn(code, msg):
        out.append(Diagnostic(Severity.WARNING, code, msg))

    values = (p.omega_f, p.omega_fp, *p.energies, p.g1, p.g2)
    if not all(math.isfinite(v) for v in values):
        err("NonFinite", "all frequencies, energies and couplings must be finite")
        return out
    if p.omega_f <= 0 or p.omega_fp <= 0:
        err("InvalidFrequency", "mode frequencies must be positive")
    if p.g1 < 0 or p.g2 < 0:
        err("NegativeCoupling", "couplings must be non-negative")
    if p.n_max1 < 0 or p.n_max2 < 0:
        err("InvalidTruncation", "n_max must be non-negative")
    if out:
        return out

    try:
        d = derive_params(p, kind, rwa=rwa)
    except DegenerateTransition as exc:
        err("DegenerateTransition", str(exc))
        return out
    except ThreePhotonResonance as exc:
        err("ThreePhotonResonance", str(exc))
        return out

    for i, e in enumerate(d.eps, start=1):
        if e > EPS_WARN:
            warn("PerturbationLarge", f"eps{i} = {e:.4g} exceeds {EPS_WARN}")

    for i, (alpha, n_max) in enumerate(zip(p.alphas, p.n_max), start=1):
        need = min_truncation(alpha)
        tail = poisson_tail(abs(alpha) ** 2, n_max)
        if n_max < need or tail > TAIL_WARN:
            warn(
                "TruncationTail",
                f"n_max{i} = {n_max} < {need} for |alpha{i}|^2 = {abs(alpha) ** 2:.4g}"
                f" (discarded tail mass {tail:.3g})",
            )

    from .effective import nonlinearity

    f = nonlinearity(kind, d, p.n_max1 + 1, p.n_max2 + 1)
    if min(f.f1, f.f2) <= 0:
        err("NonlinearityNonPositive",
            "intensity-dependent coupling changes sign inside the truncation")
    return out


def has_errors(diags) -> bool:
    return any(dg.severity is Severity.ERROR for dg in diags)

"""Three-level atoms (Lambda, V, ladder) in a two-mode quantised field with
first-order counter-rotating corrections, plus an exact dense reference."""

from .config import RunConfig, parse_config
from .dynamics import CoherentWeights, EvolvedState, coherent_weights, evolve, lambda_weights, norm_correction
from .effective import (BlockSpectrum, TripletBasis, block_spectrum, build_block, cardano_solve,
                        eigen_coefficients, nonlinearity, spectrum_grid, triplet_basis)
from .errors import ThreeLevelError
from .model import AtomKind, DerivedParams, Diagnostic, SystemParams, derive_params, validate
from .observables import TimeSeries, mandel_q, photon_moments, population_inversion, time_series

__version__ = "0.1.0"

"""acouprop: acoustic propagation coefficient estimation and relocalisation.

The package estimates the frequency-dependent propagation coefficient
gamma(w) = alpha(w) + i*kappa(w) of a medium from speaker/receiver signal
pairs, by Metropolis-Hastings Bayesian inference, closed-form log-domain
least squares, or a physics-loss neural network, and derives room impulse
responses and speaker-receiver distances (with uncertainty and 2D/3D
multilateration) from the result.
"""

from .bayes import (
    MHConfig,
    PosteriorSummary,
    PosteriorTrace,
    PriorSpec,
    ess_tail,
    gelman_rubin,
    log_likelihood,
    mh_sample,
    summarize,
)
from .errors import (
    AcoupropError,
    DegenerateInputError,
    GridMismatchError,
    InvalidInputError,
    ManifestError,
    MissingFileError,
    NoFixError,
    OverflowRangeError,
    TrainingDivergedError,
)
from .lsq import LsqEstimate, fit, log_ratio, residual
from .neural import (
    CoefficientMatrix,
    Network,
    NetworkSpec,
    TrainConfig,
    forward,
    gradients,
    loss,
    train,
    train_ensemble,
)
from .reloc import (
    Anchor,
    DistanceEstimate,
    PositionFix,
    estimate_distance,
    propagate_uncertainty,
    trilaterate,
)
from .rir import RirEstimate, apply_rir, rir_from_gamma, rir_from_measurements
from .spectral import Signal, Spectrum, dft, idft, rmse
from .synth import GroundTruth, PairDataset, load_dataset, make_gamma, simulate_pair
from .wavemodel import (
    PropagationCoefficient,
    SymmetryReport,
    propagate,
    propagate_inverse,
    symmetry_report,
    wave_equation_residual,
    wave_speed,
)

__version__ = "0.1.0"

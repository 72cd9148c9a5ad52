"""Entanglement distillation of squeezed states by displaced photon subtraction.

Truncated two-mode Fock-space simulation of single-mode-squeezed (split on a
beam splitter) and two-mode-squeezed resources, lossy distribution channels,
ideal and tap-and-click photon subtraction, and entanglement measures.
"""

__version__ = "0.1.0"

from .channels import apply_loss, loss_kraus
from .distill import (
    DisplacementPair,
    HeraldedState,
    SubtractionModel,
    TapSubtractor,
    ideal_displaced_subtract_two,
    ideal_subtract_one,
    tap_subtract,
)
from .errors import (
    AnnihilatedStateError,
    ConfigError,
    DimensionError,
    DistillError,
    HeraldError,
    InvalidStateError,
    TruncationError,
)
from .fockcore import (
    DensityOperator,
    Mode,
    PureState,
    displacement,
    embed,
    ladder,
    partial_trace,
    partial_transpose,
    trace_norm,
)
from .measures import (
    duan_simon_entangled,
    eigen_populations,
    fidelity,
    fock_populations,
    log_negativity,
    quadrature_variances,
    schmidt_coefficients,
)
from .stateprep import SourceKind, gamma_from_nbar, nbar_from_gamma, prepare_source, squeezing_db
from .sweep import (
    OptimizerSettings,
    Protocol,
    ProtocolConfig,
    ResultRow,
    converge_dim,
    evaluate,
    optimize_alpha,
    run_configs,
    sweep_grid,
)

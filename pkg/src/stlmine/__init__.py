"""Mining signal temporal logic classifiers from labeled time series.

A genetic search proposes formula structures; GP-UCB tunes each structure's
thresholds and time bounds to maximize how well the robustness separates two
classes of traces; the winner is shifted so that the sign of its robustness
is the class decision.
"""

from .cv import CvReport, FoldResult, kfold_cv, stratified_folds
from .data import (
    Confusion,
    Dataset,
    DatasetError,
    RobustnessStats,
    confusion,
    load_dataset,
    misclassification_rate,
    read_trace,
    robustness_stats,
    save_dataset,
    write_trace,
)
from .gpucb import GpModel, NoFiniteScoreError, OptimizeResult, UcbConfig, beta, gp_posterior, optimize
from .monitor import UnknownVariableError, robustness, robustness_batch, robustness_signal, satisfies
from .naval import REFERENCE_FORMULA, GeneratorError, NavalGenConfig, generate_naval
from .parser import FormulaSyntaxError, parse
from .pstl import (
    InvalidConfigurationError,
    ParameterSpace,
    check_template,
    default_space,
    instantiate,
    make_space,
)
from .roge import (
    Generation,
    MiningResult,
    RogeConfig,
    ScoredCandidate,
    calibrate,
    discrimination,
    evolve,
    generate_initial_formulae,
    learning_parameters,
    mine,
    mutate,
    recombine,
    roge,
    sample,
    size_penalty,
)
from .stl import (
    And,
    Atom,
    Eventually,
    Formula,
    Globally,
    Not,
    NotNNFError,
    Or,
    Param,
    TrueF,
    Until,
    format_formula,
    nnf,
    shift,
    size,
)
from .trace import Trace

__version__ = "0.1.0"

__all__ = [
    "And",
    "Atom",
    "Confusion",
    "CvReport",
    "Dataset",
    "DatasetError",
    "Eventually",
    "FoldResult",
    "Formula",
    "FormulaSyntaxError",
    "Generation",
    "GeneratorError",
    "Globally",
    "GpModel",
    "InvalidConfigurationError",
    "MiningResult",
    "NavalGenConfig",
    "NoFiniteScoreError",
    "Not",
    "NotNNFError",
    "OptimizeResult",
    "Or",
    "Param",
    "ParameterSpace",
    "REFERENCE_FORMULA",
    "RobustnessStats",
    "RogeConfig",
    "ScoredCandidate",
    "Trace",
    "TrueF",
    "UcbConfig",
    "UnknownVariableError",
    "Until",
    "beta",
    "calibrate",
    "check_template",
    "confusion",
    "default_space",
    "discrimination",
    "evolve",
    "format_formula",
    "generate_initial_formulae",
    "generate_naval",
    "gp_posterior",
    "instantiate",
    "kfold_cv",
    "learning_parameters",
    "load_dataset",
    "make_space",
    "mine",
    "misclassification_rate",
    "mutate",
    "nnf",
    "optimize",
    "parse",
    "read_trace",
    "recombine",
    "robustness",
    "robustness_batch",
    "robustness_signal",
    "robustness_stats",
    "roge",
    "sample",
    "satisfies",
    "save_dataset",
    "shift",
    "size",
    "size_penalty",
    "stratified_folds",
    "write_trace",
]

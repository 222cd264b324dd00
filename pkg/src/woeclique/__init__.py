"""Weight-of-Evidence encoding, IV scoring and correlation-clique feature selection
for interpretable logistic risk models."""

from .binning import BinningConstraints, BinningSpec, OptimalBinningEncoder, fit_binning, optimize, prebin
from .config import PipelineConfig, load_config, stage_seed
from .dataset import Dataset, SyntheticSpec, generate_synthetic, load_csv, temporal_split
from .encoding import WoEEncoder, information_value, variance_filter, woe, woe_map
from .evaluation import auc_roc, bootstrap_ci, calibration, evaluate
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
    InfeasibleBinningError,
    InfiniteWoEError,
    MissingTargetError,
    NumericError,
    ParseError,
    SchemaError,
    UnreliableCIError,
    UnseenCategoryWarning,
    WoECliqueError,
)
from .explain import coefficient_report, consistency_check, shap_linear
from .graph_select import build_graph, correlation_matrix, maximal_cliques, select_representatives
from .model import L2LogisticRegression, LogisticModel, fit_logistic, grid_search, predict_proba, rfe_baseline
from .selector import CliqueIVSelector

__version__ = "0.1.0"

__all__ = [
    "BinningConstraints", "BinningSpec", "CliqueIVSelector", "ConfigError", "ConvergenceError", "DataError",
    "Dataset", "DegenerateDataError", "InfeasibleBinningError", "InfiniteWoEError", "L2LogisticRegression",
    "LogisticModel", "MissingTargetError", "NumericError", "OptimalBinningEncoder", "ParseError",
    "PipelineConfig", "SchemaError", "SyntheticSpec", "UnreliableCIError", "UnseenCategoryWarning",
    "WoEEncoder", "WoECliqueError", "auc_roc", "bootstrap_ci", "build_graph", "calibration",
    "coefficient_report", "consistency_check", "correlation_matrix", "evaluate", "fit_binning", "fit_logistic",
    "generate_synthetic", "grid_search", "information_value", "load_config", "load_csv", "maximal_cliques",
    "optimize", "prebin", "predict_proba", "rfe_baseline", "select_representatives", "shap_linear", "stage_seed",
    "temporal_split", "variance_filter", "woe", "woe_map",
]

from .config import NCG_VARIANTS, LineSearchParams, Method, RestartPolicy
from .directions import (EUCLIDEAN, GUARD, BetaResult, LbfgsMemory, NcgStep, direction_gd,
                         direction_lbfgs, direction_ncg, ncg_beta)
from .driver import run
from .history import CSV_HEADER, STATUSES, THRESHOLDS, IterationRecord, OptHistory, read_history_csv
from .linesearch import ArmijoResult, LineSearchFailed, armijo, armijo_accepts, initial_trial_step

__all__ = [
    "NCG_VARIANTS", "LineSearchParams", "Method", "RestartPolicy", "EUCLIDEAN", "GUARD",
    "BetaResult", "LbfgsMemory", "NcgStep", "direction_gd", "direction_lbfgs", "direction_ncg",
    "ncg_beta", "run", "CSV_HEADER", "STATUSES", "THRESHOLDS", "IterationRecord", "OptHistory",
    "read_history_csv", "ArmijoResult", "LineSearchFailed", "armijo", "armijo_accepts",
    "initial_trial_step",
]

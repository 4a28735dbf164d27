"""Training, evaluation, sweeps and the command line."""
from .ablation import COLUMNS, SweepSpec, ablate, write_rows
from .config import VARIANTS, RunConfig
from .evaluation import EvalReport, evaluate
from .model import Checkpoint, MRNModel
from .training import TrainingDiverged, TrainResult, train

__all__ = [
    "COLUMNS", "Checkpoint", "EvalReport", "MRNModel", "RunConfig", "SweepSpec", "TrainResult",
    "TrainingDiverged", "VARIANTS", "ablate", "evaluate", "train", "write_rows",
]

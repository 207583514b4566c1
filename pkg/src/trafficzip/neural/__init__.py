from .arch import ArchDescriptor, init_params, param_shapes
from .gradcheck import grad_check
from .predictors import RnnPredictor, StgnnPredictor, adjacency_matrix, rnn_apply, stgnn_apply
from .serialize import PredictorModel, weights_checksum
from .training import Adam, TrainConfig, evaluate_nll, train_predictor

__all__ = [
    "Adam",
    "ArchDescriptor",
    "PredictorModel",
    "RnnPredictor",
    "StgnnPredictor",
    "TrainConfig",
    "adjacency_matrix",
    "evaluate_nll",
    "grad_check",
    "init_params",
    "param_shapes",
    "rnn_apply",
    "stgnn_apply",
    "train_predictor",
    "weights_checksum",
]

from .estimators import MlpEnsembleRegressor, MlpRegressor
from .network import Architecture, NetworkError, Params, backward, forward, init_params, mse_loss
from .optim import AdamW
from .store import ModelFormatError, load_model, save_model
from .train import EarlyStopper, History, TrainingError, TrainSettings, fit_network, time_ordered_split

__all__ = [
    "Architecture",
    "AdamW",
    "EarlyStopper",
    "History",
    "MlpEnsembleRegressor",
    "MlpRegressor",
    "ModelFormatError",
    "NetworkError",
    "Params",
    "TrainSettings",
    "TrainingError",
    "backward",
    "fit_network",
    "forward",
    "init_params",
    "load_model",
    "mse_loss",
    "save_model",
    "time_ordered_split",
]

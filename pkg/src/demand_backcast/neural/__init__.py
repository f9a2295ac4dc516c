"""From-scratch LSTM regressor: network, optimisers, training and gradient checks."""

from .gradcheck import GradCheckReport, grad_check
from .lstm import LstmParams, backward, forward, init_params, mse_loss
from .optim import AdamState, PlateauScheduler, adam_step, plateau_scheduler_step, sgd_step
from .training import LstmRegressor, PlateauConfig, TrainConfig, TrainTrace, train

__all__ = [
    "AdamState",
    "GradCheckReport",
    "LstmParams",
    "LstmRegressor",
    "PlateauConfig",
    "PlateauScheduler",
    "TrainConfig",
    "TrainTrace",
    "adam_step",
    "backward",
    "forward",
    "grad_check",
    "init_params",
    "mse_loss",
    "plateau_scheduler_step",
    "sgd_step",
    "train",
]

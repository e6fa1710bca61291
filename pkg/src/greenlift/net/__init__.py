from .adam import AdamState, adam_step
from .backend import BACKEND
from .engine import (Jet2, NonFiniteLossError, TapedNet, Var, forward,
                     forward_batch, forward_jet, jet_batch, loss_grad)
from .io import load_checkpoint, save_checkpoint
from .params import MlpParams, ParamGrad, flat_to_params, init_params, params_to_flat

__all__ = [
    "AdamState", "adam_step", "BACKEND", "Jet2", "NonFiniteLossError",
    "TapedNet", "Var", "forward", "forward_batch", "forward_jet", "jet_batch",
    "loss_grad", "load_checkpoint", "save_checkpoint", "MlpParams",
    "ParamGrad", "flat_to_params", "init_params", "params_to_flat",
]

from .coords import LiftedInput, augment, lift_pairs
from .kernel import (AnalyticKernel, AnalyticLiftedKernel, ConfigurationError,
                     KernelSource, NetJets, NeuralKernel, benchmark_lifted_kernel,
                     check_regime, kernel_eval)
from .losses import PenaltyWeights, loss_terms, total_loss
from .residuals import (residual_alpha, residual_boundary, residual_gamma_piecewise,
                        residual_gamma_smooth, residual_interior_piecewise,
                        residual_interior_smooth, residual_sigma,
                        residual_sigma_star, residual_symmetry)
from .sampling import SampleSets, draw_minibatch, sample_training_sets
from .training import TrainConfig, TrainResult, train, write_loss_history

__all__ = [
    "LiftedInput", "augment", "lift_pairs",
    "AnalyticKernel", "AnalyticLiftedKernel", "ConfigurationError",
    "KernelSource", "NetJets", "NeuralKernel", "benchmark_lifted_kernel",
    "check_regime", "kernel_eval",
    "PenaltyWeights", "loss_terms", "total_loss",
    "residual_alpha", "residual_boundary", "residual_gamma_piecewise",
    "residual_gamma_smooth", "residual_interior_piecewise",
    "residual_interior_smooth", "residual_sigma", "residual_sigma_star",
    "residual_symmetry",
    "SampleSets", "draw_minibatch", "sample_training_sets",
    "TrainConfig", "TrainResult", "train", "write_loss_history",
]

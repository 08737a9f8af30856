"""
Application Services Layer

These services run the workflows behind the CLI commands on top of the model
and solver packages.
"""

from .training import TrainConfig, TrainingService, TrainingState, AdamState, adam_step, loss, train
from .evaluation import accumulative_rmse, error_curve, compare_models, export_curve_csv, render_curve_svg
from .interpretation import expand, expand_pointwise, expand_with_derivatives, prune, verify_extraction
from .datasets import generate_reference, measure, toy_generator_config, toy_generator_params

__all__ = [
    'TrainConfig',
    'TrainingService',
    'TrainingState',
    'AdamState',
    'adam_step',
    'loss',
    'train',
    'accumulative_rmse',
    'error_curve',
    'compare_models',
    'export_curve_csv',
    'render_curve_svg',
    'expand',
    'expand_pointwise',
    'expand_with_derivatives',
    'prune',
    'verify_extraction',
    'generate_reference',
    'measure',
    'toy_generator_config',
    'toy_generator_params',
]

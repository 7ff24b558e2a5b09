"""Density estimation by boosting a surrogate likelihood with smooth weak learners."""

from .boosting import Ensemble, FitConfig, FitTrace, fit
from .classify import BayesModel, LabeledDataset, SyntheticTask, fit_bayes, split_experiment
from .data import Dataset, RawSamples, build_dataset, read_samples_csv, trapezoid_weights
from .errors import BoostNPMLEError, InputError, NumericalError
from .learners import LearnerSpec
from .simulate import Distribution, kl_divergence, kl_path, kl_sweep

__version__ = "0.1.0"

__all__ = [
    "BayesModel", "BoostNPMLEError", "Dataset", "Distribution", "Ensemble", "FitConfig",
    "FitTrace", "InputError", "LabeledDataset", "LearnerSpec", "NumericalError", "RawSamples",
    "SyntheticTask", "build_dataset", "fit", "fit_bayes", "kl_divergence", "kl_path", "kl_sweep",
    "read_samples_csv", "split_experiment", "trapezoid_weights",
]

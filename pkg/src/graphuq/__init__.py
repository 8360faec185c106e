"""Bayesian semi-supervised graph classification with uncertainty quantification."""

from .data import LabeledDataset, subsample_labels, two_clusters, two_moons
from .errors import ConfigError, DataError, GraphError, GraphUQError, NumericalError
from .graph import (WeightedGraph, cosine_weights, knn_weights, normalized_laplacian,
                    rbf_weights, self_tuning_weights)
from .models import (GinzburgLandauModel, Labels, LevelSetModel, NullModel, ProbitModel,
                     make_model)
from .optimizer import FlowConfig, MapResult, map_estimate
from .prior import PriorSampler
from .sampler import ChainConfig, ChainResult, ChainStats, pcn, run_chains, tune_beta
from .spectrum import LaplacianSpectrum, eigendecompose
from .uq import UQSummary, summarize

__version__ = "0.1.0"

__all__ = [
    "ChainConfig", "ChainResult", "ChainStats", "ConfigError", "DataError", "FlowConfig",
    "GinzburgLandauModel", "GraphError", "GraphUQError", "LabeledDataset", "Labels",
    "LaplacianSpectrum", "LevelSetModel", "MapResult", "NullModel", "NumericalError",
    "PriorSampler", "ProbitModel", "UQSummary", "WeightedGraph", "cosine_weights",
    "eigendecompose", "knn_weights", "make_model", "map_estimate", "normalized_laplacian",
    "pcn", "rbf_weights", "run_chains", "self_tuning_weights", "subsample_labels",
    "summarize", "tune_beta", "two_clusters", "two_moons",
]

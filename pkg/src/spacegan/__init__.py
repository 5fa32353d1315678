"""Spatially conditioned GAN augmentation and ensembles for geospatial regression."""

from spacegan.weights import NeighborhoodGraph, knn_graph, queen_graph, to_weight_matrix
from spacegan.stats import Scaler, local_morans_i, mie, rmse
from spacegan.datasets import SpatialDataset, gen_toy1, gen_toy2, load_california

__version__ = "0.1.0"

__all__ = [
    "NeighborhoodGraph",
    "Scaler",
    "SpatialDataset",
    "gen_toy1",
    "gen_toy2",
    "knn_graph",
    "load_california",
    "local_morans_i",
    "mie",
    "queen_graph",
    "rmse",
    "to_weight_matrix",
]

"""Low-rank trajectory descriptors for pedestrian trajectory forecasting."""

from .anchors import AnchorSet, anchor_predict, generate_anchors, kmeans, refine
from .baselines import ParametricBasis, make_basis
from .dataset import Tracklet, extract_tracklets, flatten, parse_annotations, to_matrix, unflatten
from .errors import ConfigError, DataError, EigenTrajError, NumericError, ParseError, ShapeError
from .etspace import DescriptorPair, ETBasis, fit_descriptor, fit_pair, project, reconstruct
from .metrics import ade, col, evaluate, fde, tcc

__version__ = "0.1.0"

__all__ = [
    "AnchorSet", "ConfigError", "DataError", "DescriptorPair", "ETBasis", "EigenTrajError", "NumericError",
    "ParametricBasis", "ParseError", "ShapeError", "Tracklet", "ade", "anchor_predict", "col", "evaluate",
    "extract_tracklets", "fde", "fit_descriptor", "fit_pair", "flatten", "generate_anchors", "kmeans",
    "make_basis", "parse_annotations", "project", "reconstruct", "refine", "tcc", "to_matrix", "unflatten",
]

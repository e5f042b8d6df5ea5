from .params import ConstructionParams, PreparationTargets, preparation_targets, prepare_params
from .scales import DerivedScales, ModelEntropy, derive_scales, coherence_residual, inflate_eta, model_entropy
from .oscillation import OscillationProfile, oscillation_profile
from .model import (
    AffinePiece,
    OscillationPiece,
    BranchMap,
    AffineHorseshoeModel,
    build_branch_map,
    assemble_model,
    POINTWISE_L_LIMIT,
)
from .markov import (
    Box,
    RectangleFamily,
    build_rectangles,
    image_box,
    MarkovVerification,
    verify_markov_crossings,
    window_margin,
    ContainmentReport,
    iterate_containment,
)
from .dimension import ModelDimension, conformal_hausdorff_dimension, model_dimension

__all__ = [
    "ConstructionParams",
    "PreparationTargets",
    "preparation_targets",
    "prepare_params",
    "DerivedScales",
    "derive_scales",
    "coherence_residual",
    "model_entropy",
    "ModelEntropy",
    "inflate_eta",
    "OscillationProfile",
    "oscillation_profile",
    "AffinePiece",
    "OscillationPiece",
    "BranchMap",
    "AffineHorseshoeModel",
    "build_branch_map",
    "assemble_model",
    "POINTWISE_L_LIMIT",
    "Box",
    "RectangleFamily",
    "build_rectangles",
    "image_box",
    "MarkovVerification",
    "verify_markov_crossings",
    "window_margin",
    "ContainmentReport",
    "iterate_containment",
    "ModelDimension",
    "conformal_hausdorff_dimension",
    "model_dimension",
]

"""Rank-1 nonnegative background + sparse foreground video decomposition,
with certificates for unique, globally optimal segmentation under local
search."""

from .certify import (CertificateReport, IdentifiabilityCheck, RectangleCheck,
                      RectangleSpec, certify_video, check_identifiability,
                      check_necessary_conditions, common_background_pixel,
                      condition_number, condition_number_bound,
                      margin_constant, max_obscured_frames,
                      max_relative_object_size, rectangle_identifiability)
from .core import (DEFAULT_EPS_S, DataMatrix, Decomposition, FrameGeometry,
                   PerFrameSets, SparseResidual, assemble_data_matrix,
                   frame_of_column, index_of_pixel, pixel_of_index,
                   residual_sets, vectorize_frame)
from .estimator import RankOneBackgroundSubtractor
from .graphs import (BipartiteGraph, background_connected, build_graph,
                     degree_stats, graph_from_sets, has_connected_background,
                     is_connected, is_embedded, mask_degree_stats)
from .preprocess import (PreprocessConfig, repeat_frames, rescale_resolution,
                         rescaled_geometry, shift_pixels, square_video,
                         to_grayscale)
from .solver import (MultiRestartResult, SolveResult, SolverConfig,
                     SolverDivergenceError, multi_restart, objective, solve,
                     subgradient)
from .synth import (Scene, SceneSpec, balanced_decomposition, certified_scene,
                    generate)

__all__ = [
    "CertificateReport", "IdentifiabilityCheck", "RectangleCheck",
    "RectangleSpec", "certify_video", "check_identifiability",
    "check_necessary_conditions", "common_background_pixel",
    "condition_number", "condition_number_bound", "margin_constant",
    "max_obscured_frames", "max_relative_object_size",
    "rectangle_identifiability",
    "DEFAULT_EPS_S", "DataMatrix", "Decomposition", "FrameGeometry",
    "PerFrameSets", "SparseResidual", "assemble_data_matrix",
    "frame_of_column", "index_of_pixel", "pixel_of_index", "residual_sets",
    "vectorize_frame",
    "RankOneBackgroundSubtractor",
    "BipartiteGraph", "background_connected", "build_graph", "degree_stats",
    "graph_from_sets", "has_connected_background", "is_connected",
    "is_embedded", "mask_degree_stats",
    "PreprocessConfig", "repeat_frames", "rescale_resolution",
    "rescaled_geometry", "shift_pixels", "square_video", "to_grayscale",
    "MultiRestartResult", "SolveResult", "SolverConfig",
    "SolverDivergenceError", "multi_restart", "objective", "solve",
    "subgradient",
    "Scene", "SceneSpec", "balanced_decomposition", "certified_scene",
    "generate",
]

"""Spectral two-way classification of noisy blown-up matrices."""

from .clustering import (
    Clustering,
    Representation,
    WeightedKMeans,
    kmeans,
    representatives,
    same_partition,
    structural_variance,
)
from .correspondence import (
    CorrespondenceAnalysis,
    CorrespondenceDecomposition,
    corr_transform,
    corr_vectors,
    corr_weighted_variance,
    correspondence,
    pattern_delta,
)
from .exceptions import DataError, NoStructureError, ParameterError, StructuralError, TwoWayError
from .model import (
    BlockStructure,
    NoiseSpec,
    PatternMatrix,
    blow_up,
    check_gc,
    sample_bernoulli_noise,
    sample_noise,
)
from .reconstruct import (
    BlockReconstructor,
    ReconstructionResult,
    align_orthonormal,
    reconstruct,
    subspace_distances,
)
from .spectra import (
    GapDecision,
    SvdResult,
    detect_gap,
    dilate,
    exact_blownup_svd,
    spectral_norm,
    thin_svd,
)

__version__ = "0.1.0"

__all__ = [
    "BlockReconstructor", "BlockStructure", "Clustering", "CorrespondenceAnalysis",
    "CorrespondenceDecomposition", "DataError", "GapDecision", "NoStructureError",
    "NoiseSpec", "ParameterError", "PatternMatrix", "ReconstructionResult",
    "Representation", "StructuralError", "SvdResult", "TwoWayError", "WeightedKMeans",
    "align_orthonormal", "blow_up", "check_gc", "corr_transform", "corr_vectors",
    "corr_weighted_variance", "correspondence", "detect_gap", "dilate",
    "exact_blownup_svd", "kmeans", "pattern_delta", "reconstruct", "representatives",
    "same_partition", "sample_bernoulli_noise", "sample_noise", "spectral_norm",
    "structural_variance", "subspace_distances", "thin_svd",
]

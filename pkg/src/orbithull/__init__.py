"""Convex hulls of rotation orbits of anisotropic 3x3 tensors, and the RDC data path that motivates them."""

from .tensor_core import (
    AnisoTensor,
    IsotypicalSplit,
    Rotation,
    SpectralData,
    L_e,
    act,
    axis_frame,
    coaxial_rotation,
    eigenvalues,
    isotypical_split,
    orbit_dimension,
    random_rotation,
    random_rotations,
    spectral,
)
from .single_ion_hull import (
    AtomicMeasure,
    DomainError,
    HullSpec,
    OutsideHullError,
    decompose,
    decompose_zero_eig,
    evaluate,
    f_map,
    facet,
    invariants,
    invert_f_map,
    membership,
    region_X_contains,
)
from .pair_hull import (
    CoaxialFace,
    MomentMatrix,
    TensorPair,
    circle_hull_decompose,
    coaxial_face,
    coaxial_scan,
    decompose_pair,
    face_dimension_empirical,
    facet_decompose,
    hull_dimension,
    L_e_alpha,
    moment_matrix,
    necessary_membership,
    project_alpha,
)
from .rdc_pipeline import (
    DipoleObservation,
    EnsembleSpec,
    UnderdeterminedError,
    estimate_tensor,
    forward_rdc,
    mean_tensor,
    p_max,
    p_max_pair_upper,
)

__version__ = "0.1.0"

"""Numerical laboratory for dyadic harmonic analysis on the unit disk.

Dyadic Carleson-box geometry, weight-class characteristics, sparse and
maximal operators, a discretized Bergman projection, and the conformal
transfer of all of these to planar domains given by an injective
holomorphic map of the disk.

Experiment runners live in ``bergmanlab.experiments`` and behind the
``bergman-lab`` command; they are not imported here.
"""

__version__ = "0.1.0"

from .conformal import ConformalMap, boundary_trace, koebe_ratio, parse_map
from .dyadic import (
    Arc,
    DiskMesh,
    DyadicInterval,
    MeshPair,
    approximating_pair,
    box_area,
    build_mesh_pair,
    top_area,
)
from .operators import (
    CellFunction,
    SourcePanels,
    bergman_project,
    cz_decompose,
    cz_verify,
    maximal_dyadic,
    maximal_weak_check,
    sparse_apply,
    sparse_norm_check,
    weak_type_sweep,
    weighted_lp_norm,
)
from .transfer import (
    DomainSpec,
    bp_omega,
    dp_characteristic,
    image_measure,
    neighbor_check,
    rhd_characteristic,
    transfer_identity_check,
    transfer_strong_norms,
    transfer_weak_check,
    vitali_select,
)
from .weights import (
    CharacteristicReport,
    ConformalDeriv,
    Constant,
    PowerDistance,
    Regularized,
    Weight,
    apr_and_doubling,
    bp_characteristic,
    parse_weight,
    regularization_suite,
    reverse_holder_gain,
)

__all__ = [
    "Arc",
    "CellFunction",
    "CharacteristicReport",
    "ConformalDeriv",
    "ConformalMap",
    "Constant",
    "DiskMesh",
    "DomainSpec",
    "DyadicInterval",
    "MeshPair",
    "PowerDistance",
    "Regularized",
    "SourcePanels",
    "Weight",
    "__version__",
    "approximating_pair",
    "apr_and_doubling",
    "bergman_project",
    "boundary_trace",
    "box_area",
    "bp_characteristic",
    "bp_omega",
    "build_mesh_pair",
    "cz_decompose",
    "cz_verify",
    "dp_characteristic",
    "image_measure",
    "koebe_ratio",
    "maximal_dyadic",
    "maximal_weak_check",
    "neighbor_check",
    "parse_map",
    "parse_weight",
    "regularization_suite",
    "reverse_holder_gain",
    "rhd_characteristic",
    "sparse_apply",
    "sparse_norm_check",
    "top_area",
    "transfer_identity_check",
    "transfer_strong_norms",
    "transfer_weak_check",
    "vitali_select",
    "weak_type_sweep",
    "weighted_lp_norm",
]

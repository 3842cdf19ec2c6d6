"""Frames, projections and matrix tuples over finite-dimensional C*-algebras.

The algebra is a direct sum of full matrix blocks, fixed by its signature
(block sizes).  Every spectral computation runs on the per-block flattened
complex matrices through a Jacobi eigensolver.
"""
from .cstar import (
    AlgebraSignature,
    CStarElement,
    SpectrumReport,
    cstar_norm,
    identity,
    is_positive,
    order_leq,
    spectral_map,
    spectrum,
    zero,
)
from .errors import *  # noqa: F401,F403
from .frames import (
    FrameCertificate,
    FrameSystem,
    analysis_image,
    build_frame,
    canonical_projection,
    certify_frame,
    closest_parseval,
    equal_inner_normalize,
    frame_operator,
    is_parseval,
    modular_distance,
    naimark_complement,
)
from .module import (
    ModuleMatrix,
    ModuleVector,
    chordal_distance,
    identity_matrix,
    inner,
    is_projection,
    mhs_inner,
    mhs_norm,
    projection_rank,
    standard_basis,
    trace,
)
from .opscale import (
    CoefficientVector,
    MatrixTuple,
    forster_transform,
    frame_to_tuple,
    matrix_paulsen_probe,
    nearly_eps,
    operator_scale,
    radial_isotropic_check,
    tuple_certify,
    tuple_distance,
    tuple_to_frame,
)
from .paulsen import (
    cfm_flow,
    harmonic_frame,
    imp_check,
    lower_bound_witness,
    modular_paulsen_solve,
    projection_construct,
)

__version__ = "0.1.0"

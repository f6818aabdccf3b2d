"""Synthetic multi-view geometry workbench for algebraic curves.

The package builds projective two-view and multi-view instruments around
space curves: tangency constraints that pin down the epipolar geometry,
three reconstruction routes (cone intersection, dual surface, Chow form),
and classification of point trajectories observed by unsynchronized cameras.
"""

from .polycore import (
    DEFAULT_TOL,
    HomogeneousPolynomial,
    MonomialBasis,
    enumerate_monomials,
    evaluate,
    fit_nullspace,
    fit_vanishing_form,
    proportional,
    pullback,
    quadratic_matrix,
    restrict_to_line,
    whitening_map,
)
from .projective_cameras import (
    Camera,
    EpipolarGeometry,
    Plane3,
    PluckerLine,
    absolute_conic_image,
    canonical_pair,
    center,
    fundamental,
    homography,
    line_image,
    optical_ray,
    plane_of_line,
)
from .curve_models import (
    RationalCurve3D,
    class_of,
    dual_image_curve,
    image_tangent,
    implicit_image_curve,
    node_count,
    preset_curve,
)
from .kruppa import (
    KruppaInstance,
    build_instance,
    detection_response,
    gen_kruppa_constraints,
    quadric_degeneracy,
    refine_epipolar,
    solution_dimension,
    tangency_points,
)
from .reconstruct import (
    ChowForm,
    DualSurface,
    InsufficientViews,
    ReconstructionError,
    chow_membership,
    chow_reconstruct,
    consistency_report,
    dual_reconstruct,
    epipolar_sweep,
    min_views_chow,
    min_views_dual,
    views_for_chow,
    views_for_dual,
)
from .dynamics import (
    MotionClass,
    RayObservation,
    classify_motion,
    lift_observations,
    localize_on_ray,
    recover_line_motion,
    recover_static_point,
    recover_trajectory_chow,
)
from .scenes import (
    camera_ring,
    make_trajectory,
    observe_trajectory,
    random_camera,
)

__all__ = [
    "DEFAULT_TOL",
    "HomogeneousPolynomial",
    "MonomialBasis",
    "enumerate_monomials",
    "evaluate",
    "fit_nullspace",
    "fit_vanishing_form",
    "proportional",
    "pullback",
    "quadratic_matrix",
    "restrict_to_line",
    "whitening_map",
    "Camera",
    "EpipolarGeometry",
    "Plane3",
    "PluckerLine",
    "absolute_conic_image",
    "canonical_pair",
    "center",
    "fundamental",
    "homography",
    "line_image",
    "optical_ray",
    "plane_of_line",
    "RationalCurve3D",
    "class_of",
    "dual_image_curve",
    "image_tangent",
    "implicit_image_curve",
    "node_count",
    "preset_curve",
    "KruppaInstance",
    "build_instance",
    "detection_response",
    "gen_kruppa_constraints",
    "quadric_degeneracy",
    "refine_epipolar",
    "solution_dimension",
    "tangency_points",
    "ChowForm",
    "DualSurface",
    "InsufficientViews",
    "ReconstructionError",
    "chow_membership",
    "chow_reconstruct",
    "consistency_report",
    "dual_reconstruct",
    "epipolar_sweep",
    "min_views_chow",
    "min_views_dual",
    "views_for_chow",
    "views_for_dual",
    "MotionClass",
    "RayObservation",
    "classify_motion",
    "lift_observations",
    "localize_on_ray",
    "recover_line_motion",
    "recover_static_point",
    "recover_trajectory_chow",
    "camera_ring",
    "make_trajectory",
    "observe_trajectory",
    "random_camera",
]

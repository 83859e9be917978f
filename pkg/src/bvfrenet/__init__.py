"""Frenet frames, curves and invariants for curvature/torsion data of bounded variation."""

from .bvmeasure import (
    BVScalar,
    CountableSkewPath,
    GeometricJumpFamily,
    SkewJump,
    SkewPath,
    decompose,
    mollify,
    total_variation,
    truncate_jumps,
    validate_jumps,
)
from .curvegeom import (
    Curve,
    GeomSummary,
    PolygonalCurve,
    discrete_frechet,
    inscribe,
    integrate_tangent,
    invariants_exact,
    jump_angles,
    summarize,
    tantrix_variation,
)
from .solver import (
    FramePath,
    SolverConfig,
    jump_step,
    residual_check,
    solve_2d,
    solve_bv,
    solve_bv_general,
    solve_continuous,
    solve_mollified_oracle,
)

__version__ = "0.1.0"

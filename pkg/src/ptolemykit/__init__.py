"""Computational checks for Ptolemy metric spaces and their isometry groups."""
from .errors import (
    DegenerateQuadruple,
    DivergentProduct,
    InvalidInput,
    PtolemyError,
    Unsupported,
    UnsupportedGroup,
    UnsupportedSet,
    UnsupportedSpace,
)
from .kernels import BACKEND
from .metric import (
    CrossRatioTriple,
    FiniteMetricSpace,
    Quadruple,
    Region,
    crt,
    crt_of,
    involutive_metric,
    involutive_scan,
    is_circle,
    load_space,
    ptolemy_defect,
    ptolemy_scan,
)
from .models import (
    BoundaryPoint,
    ModelSpace,
    bourdon_metric,
    gromov_product,
    parse_space,
    sample_space,
    schoenberg_test,
)
from .convexity import (
    distance_convexity_scan,
    lemma_aux_scan,
    min_enclosing_ball,
    project_convex,
    strict_convexity_scan,
)
from .busemann import Line, Ray, busemann, busemann_difference_scan, busemann_line_sum
from .groups import (
    AxisResult,
    EuclideanIsometry,
    GroupPresentation,
    busemann_invariance_check,
    displacement,
    is_torsion,
    min_displacement,
    preset,
    rough_isometry_verify,
    straightness_report,
    word_norm,
)
from .affine import (
    AffineFamily,
    AnalyticFamily,
    LinearFunctional,
    evaluation_embed,
    hl_isometry_check,
    inner_product_detect,
    is_affine,
    separates_points,
)
from .report import PropertyReport, Verdict, load_schema

__version__ = "0.1.0"

"""Sparse shape composition and recovery on pixel grids."""

from .geometry import (
    Circle,
    Ellipse,
    Grid,
    Polygon,
    Rectangle,
    RegionMask,
    ScalarField,
    Shape,
    Triangle,
    dissimilarity,
    mask_from_positive_support,
    rasterize,
    shape_from_record,
    shape_to_record,
    signed_distance,
)
from .knolls import (
    Knoll,
    ShapeDictionary,
    assemble_level_set,
    delta_eps,
    heaviside_eps,
    load_dictionary,
    make_dictionary,
    make_knoll,
    save_dictionary,
    shape_of,
)
from .solver import (
    AffineLeastSquaresProblem,
    BpdnInfo,
    ResidualProblem,
    SolveTrace,
    SolverError,
    SolverParams,
    adjoint_probe,
    asym_l1,
    asym_linf_polar,
    bpdn_step,
    check_descent,
    pareto_slope,
    project_asym_ball,
    solve,
    spg_lasso,
)
from .segmentation import (
    Image,
    RegionStats,
    SegmentationProblem,
    random_pm1_init,
    update_stats,
)
from .ct import (
    BLANK_SCAN_DEFAULT,
    MU_AIR,
    MU_BONE,
    MU_SOFT,
    CountData,
    CTProblem,
    RayGeometry,
    Sinogram,
    TwoPhaseCTProblem,
    fbp_baseline,
    load_counts,
    load_phantom,
    phantom_from_shapes,
    radon_adjoint,
    radon_apply,
    save_counts,
    save_phantom,
    simulate_counts,
    solve_two_phase,
)
from .config import ExperimentConfig, load_config

__version__ = "0.1.0"

"""Latin boxes at desk scale: random 0-1 array models, exact and heuristic
box finders, matching tools, triangle packing, and threshold experiments.
"""

from __future__ import annotations

from .arrays import (
    Array3D,
    ArrayProcess,
    ColoredArray,
    PartialLatinBox,
    empty_shafts,
    sample_binomial,
    sample_green_blue,
    sample_process,
    shaft_degrees,
    validate_latin_box,
)
from .enumeration import (
    Polynomial,
    contains_square,
    count_latin_boxes,
    count_rectangles_exact,
    enumerate_squares,
    fixed_point,
    fixed_points,
    iterate_block_probability,
    permanent_bounds,
    q_small,
    q_tilde,
    rectangle_count_asymptotic,
    square_supports,
)
from .errors import SizeCapError
from .finders import (
    FinderOutcome,
    StagedParams,
    StageFailure,
    build_B2,
    find_block_recursive,
    find_exact,
    find_plane_matching,
    find_staged,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .matching import (
    BipartiteGraph,
    Matching,
    UniformMatchingSampler,
    default_delta,
    has_L_factor,
    l_factor_hall_oracle,
    l_factor_witness,
    max_matching,
    permanent,
    pm_count_lower_bound,
    pseudorandom_audit,
    random_regular_bipartite,
    random_subgraph,
    sample_pm_fast,
    sample_uniform_pm,
)
from .packing import (
    Trajectory,
    TriangleSET,
    TripartiteHypergraph,
    deviation_report,
    greedy_pack,
    ode_residual,
    predicted,
    process_pack,
)
from .rng import randbelow, substream

__version__ = "0.1.0"

__all__ = [
    "Array3D",
    "ArrayProcess",
    "BipartiteGraph",
    "ColoredArray",
    "FinderOutcome",
    "KERNEL_BACKEND",
    "Matching",
    "PartialLatinBox",
    "Polynomial",
    "SizeCapError",
    "StageFailure",
    "StagedParams",
    "Trajectory",
    "TriangleSET",
    "TripartiteHypergraph",
    "UniformMatchingSampler",
    "build_B2",
    "contains_square",
    "count_latin_boxes",
    "count_rectangles_exact",
    "default_delta",
    "deviation_report",
    "empty_shafts",
    "enumerate_squares",
    "find_block_recursive",
    "find_exact",
    "find_plane_matching",
    "find_staged",
    "fixed_point",
    "fixed_points",
    "greedy_pack",
    "has_L_factor",
    "iterate_block_probability",
    "l_factor_hall_oracle",
    "l_factor_witness",
    "max_matching",
    "ode_residual",
    "permanent",
    "permanent_bounds",
    "pm_count_lower_bound",
    "predicted",
    "process_pack",
    "pseudorandom_audit",
    "q_small",
    "q_tilde",
    "randbelow",
    "random_regular_bipartite",
    "random_subgraph",
    "rectangle_count_asymptotic",
    "sample_binomial",
    "sample_green_blue",
    "sample_pm_fast",
    "sample_process",
    "sample_uniform_pm",
    "shaft_degrees",
    "square_supports",
    "substream",
    "validate_latin_box",
    "__version__",
]

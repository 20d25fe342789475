# flake8: noqa
from .crgeom import (
    CommutatorEntry,
    CommutatorTable,
    Frame,
    VectorField,
    build_table,
    capital_lambda,
    decompose_in_frame,
    decompose_symbolic,
    lambda_step_explicit,
    lie_bracket,
    point_type,
    tangential_frame,
)
from .domain import (
    BoundaryPatch,
    DomainModel,
    PRESETS,
    from_config,
    from_preset,
    sample_patch,
    tau_global,
)
from .boundary import (
    ball_contains,
    capital_D,
    evaluate_region,
    lambda_theta,
    point_geometry,
    project_to_boundary,
    region_contains,
    unit_normal,
)
from .counterexample import (
    build_packing,
    covering_check,
    eval_f_n,
    eval_f_product,
    eval_g,
    find_zero_near,
    fit_K,
    fit_stage,
    oscillation_experiment,
    verify_zero_in_region,
    winding_number,
)

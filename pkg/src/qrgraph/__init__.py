"""qrgraph: pullback metrics, pullback measures, discrete p-modulus and
quasiregularity certificates on finite weighted graphs, with an explicit
bi-Lipschitz embedding pipeline for finite-multiplicity 1-BDD maps."""

__version__ = "0.1.0"

from .spaces import (  # noqa: F401
    Space,
    Continuum,
    Curve,
    ball,
    ball_closed,
    components,
    diameter,
    doubling_constant,
    bounded_turning_constant,
    path_metric,
)
from .covering import (  # noqa: F401
    VertexMap,
    multiplicity,
    max_multiplicity,
    u_component,
    local_index,
    branch_set,
    normal_radius,
    decompose_fibers,
    greedy_cover,
)
from .pullback import (  # noqa: F401
    pullback_metric_bracket,
    pullback_metric_exact,
    factorize,
    verify_projection,
    length_metric,
)
from .measures import (  # noqa: F401
    pullback_measure,
    jacobians,
    essential_index,
    condition_N_check,
    condition_N_inverse_check,
)
from .modulus import (  # noqa: F401
    CurveFamily,
    modulus,
    modulus_bruteforce,
    annulus_modulus,
    minimal_upper_gradient,
    ko_certificate,
    ki_certificate,
    vaisala_certificate,
    analytic_qr_constant,
)
from .dilatation import (  # noqa: F401
    dilatation_profile,
    inverse_dilatation_profile,
    lipschitz_field,
    bld_verify,
    bdd_verify,
    lq_verify,
    bqs_gauge,
)
from .embedding import embed, fiber_scale_check, composition_bound_check  # noqa: F401
from .generators import (  # noqa: F401
    gen_cycle,
    gen_grid,
    gen_polar_grid,
    gen_winding,
    gen_cycle_cover,
    gen_pullback_space,
)

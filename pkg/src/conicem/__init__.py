"""conicem: numerical verification of electromagnetic scattering from conical corners.

Library layout mirrors the subject matter: geometry (cones, coronal domains),
fields (CGO pairs, plane waves, Herglotz waves, sources), quadrature,
asymptotics (moment/tail lemma sweeps), scattering (far fields), indicator
(apex recovery, visibility, uniqueness experiments), herglotz (rate checks),
cli (batch experiment runner behind the ``conic-em`` entry point).
"""

from .geometry import (
    Background,
    Ball,
    ConeSpec,
    ConvexPolytope,
    CoronalSpec,
    cone_contains,
    cone_direction_bound,
    make_cone,
    make_coronal,
)
from .fields import (
    CGOParams,
    ComplexVectorField,
    HerglotzKernel,
    bump_field,
    cgo_pair_electric,
    cgo_pair_magnetic,
    constant_kernel,
    herglotz_electric,
    herglotz_magnetic,
    holder_source,
    maxwell_residual,
    plane_wave_incident,
    rho_p,
)
from .quadrature import (
    QuadratureSpec,
    integrate_cap,
    integrate_cone,
    integrate_lateral,
    integrate_sphere,
    local_average,
)
from .asymptotics import (
    DecayFit,
    cone_exp_integral,
    fit_decay_exponent,
    lower_bound_constant,
    radial_moment,
    verify_cgo_norm_bounds,
    verify_lemma24,
)
from .scattering import (
    FarFieldPattern,
    MediumParams,
    SourcePair,
    born_far_field,
    constant_medium,
    far_field_equiv_check,
    far_field_from_source,
    farfield_distance,
    induced_sources_from_medium,
    nonradiating_source,
)
from .indicator import (
    ApexEstimate,
    CauchyCapData,
    cgo_boundary_functional,
    classify_visibility,
    coronal_uniqueness_experiment,
    integral_identity_residual,
    invert_phi_samples,
    recover_apex_source,
    recover_apex_source_from_volume,
    sample_cauchy_data,
)
from .herglotz import (
    apex_average_profile,
    kernel_norm,
    rate_gate,
    remainder_bound_check,
)

__version__ = "0.1.0"

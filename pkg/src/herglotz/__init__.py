"""Ray transforms on spherically symmetric media with piecewise radial wave speeds."""
from ._errors import (
    AliasRisk,
    ContractionFailure,
    DivisionByZero,
    DomainMismatch,
    HerglotzError,
    HerglotzViolation,
    IllConditioned,
    JumpTangency,
    NotConverged,
    NotPeriodic,
    OutOfDomain,
    OutOfRange,
    ProjectionResidual,
    QuadratureFailure,
    StepTooLarge,
)
from .abel import (
    KernelSpec,
    abel_derivative,
    abel_forward,
    c_alpha,
    compose_J,
    invert_classical,
    invert_factored,
    invert_neumann,
)
from .funk import (
    SphericalField,
    funk_eigenvalues,
    funk_even_recover,
    funk_forward,
    great_circle_average,
    normal_grid,
    random_field,
    rotate,
    rotation_matrix,
)
from .geodesics import (
    BrokenRaySpec,
    GeodesicSpec,
    PathPolyline,
    RayQuadrature,
    alpha_prime_zeros,
    broken_ray,
    chebyshev_T,
    find_periodic_radii,
    geodesic_length,
    is_periodic,
    opening_angle,
    partial_angle,
    trace_geodesic,
    trace_ode_oracle,
    weight_H,
)
from .grid import GridFunction, RadialProfile
from .transforms import (
    AttenuationProfile,
    FourierField,
    Sinogram,
    a0_invert,
    attenuation_E,
    attenuation_Lambda,
    brt_circle_average,
    broken_ray_average,
    fourier_decompose,
    mode_forward,
    mode_forward_attenuated,
    pbrt_direct,
    pbrt_forward,
    planar_average,
    sinogram,
    xray_forward,
    xray_invert_modes,
)
from .wave_speed import HerglotzReport, WaveSpeed, check_herglotz, eval_c, rho, rho_inverse, rho_prime

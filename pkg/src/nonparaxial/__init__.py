"""Path-integral propagation for the quartic (non-paraxial) envelope equation.

    i psi_z + psi_xx / 2 - (eps / 8) psi_xxxx = 0

Three routes to the propagator are provided and cross-checked: the exact
spectral symbol, the closed-form first-order kernel and direct quadrature of
the short-time kernel integral.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AdmissibilityError,
    BandLimitError,
    ConfigurationError,
    DomainError,
    NonConvergenceError,
    NonParaxialError,
)
from .model import (  # noqa: E402
    ComplexField,
    GridSpec,
    PropagationParams,
    SpectralField,
    beta_from_epsilon,
    epsilon_from_spatial,
    epsilon_from_temporal,
    gaussian_packet,
    minimal_length,
    rms,
)
from .dispersion import exact_kz, lambda_min, mode_roots, p_max, quartic_omega, truncation_error  # noqa: E402
from .kernel import (  # noqa: E402
    KernelMethod,
    KernelQuery,
    KernelValue,
    fresnel_kernel,
    intensity_first_order,
    kernel_closed_form,
    kernel_quadrature,
    pde_residual,
    positivity_radius,
)
from .propagate import (  # noqa: E402
    first_order_density,
    fphe_step,
    kernel_convolve,
    negativity_scan,
    spectral_step,
)
from .analysis import (  # noqa: E402
    ModeSolution,
    berry_phase_x,
    berry_phase_z,
    build_mode,
    euclidean_action,
    instanton,
    instanton_trajectory,
)

"""Variable-exponent Lebesgue norms, weak norms and nonlinear potentials,
with refinement-based checks of their boundedness properties."""

from .errors import (ConfigError, ConvergenceError, DomainMismatchError, GridError,
                     SupercriticalExponentError, VarExpError)
from .fields import (Domain, ExponentField, RadialDomain, ScalarField, constant_exponent,
                     ess_bounds, harmonic_mean, holder_conjugate, log_holder_modulus,
                     make_exponent, make_field, oscillation_check, sobolev_conjugate)
from .spaces import (LevelScan, NormResult, adversarial_exponent, embedding_check,
                     luxemburg_norm, modular, power_rescale, weak_modular_sup, weak_norm)
from .potentials import (KernelSpec, MeasureSpec, ball_mass, havin_mazya, hedberg_check,
                         kernel_equivalence_check, maximal, riesz, wolff, wolff_vs_havin)
from .interpolation import (KProfile, infimum_formula, interpolation_identity_check,
                            k_functional_Linf, tail_kernel_norm, theta_norm)
from .fundamental import (RadialSolution, Regularization, asymptotics_check,
                          fundamental_solution, l1_uniformity_check, membership_scan,
                          regularize)

__version__ = "0.1.0"

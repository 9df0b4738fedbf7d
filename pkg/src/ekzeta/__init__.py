"""Hecke L-values of imaginary quadratic fields: exact field/ray-class
arithmetic, Eisenstein-Kronecker lattice sums with two independent
evaluation routes, elliptic units at the 12th-power level, and a
verification CLI."""

from .errors import EkzetaError
from .kronecker import (
    KroneckerSumSpec,
    area_A,
    beta_prime_kernel_check,
    eisenstein_kronecker_Mj,
    epstein_continued,
    horospherical_rho,
    pontryagin_pairing,
)
from .lattice import OrientedLattice
from .lvalues import (
    L_continued,
    L_direct_lattice,
    L_prime_at,
    deninger_value,
    dirichlet_series_L,
    kronecker_limit_rhs,
)
from .numerics import (
    bernoulli_poly,
    ramanujan_delta,
    sigma_and_quasiperiods,
    upper_incomplete_gamma,
)
from .quadfield import IdealHNF, QuadField, make_field, parse_ideal
from .rayclass import HeckeCharacter, characters, ray_class_group
from .units import elliptic_unit_z, norm_compat_check, theta12, u_of_a

__version__ = "0.1.0"

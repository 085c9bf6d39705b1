"""Numerical kernels: quadrature, sphere rules, Bessel functions, eigen, KS, RNG."""

from .bessel import bessel_j, bessel_j_ladder
from .ks import kolmogorov_sf, ks_statistic, ks_two_sample
from .linalg import jacobi_eigh, sym_eigen_min
from .quadrature import QuadratureResult, gauss_legendre_panels, integrate_1d
from .rng import rng_stream
from .sphere import integrate_sphere, sphere_area, sphere_rule

__all__ = [
    "QuadratureResult",
    "bessel_j",
    "bessel_j_ladder",
    "gauss_legendre_panels",
    "integrate_1d",
    "integrate_sphere",
    "jacobi_eigh",
    "kolmogorov_sf",
    "ks_statistic",
    "ks_two_sample",
    "rng_stream",
    "sphere_area",
    "sphere_rule",
    "sym_eigen_min",
]

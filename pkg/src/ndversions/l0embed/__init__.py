"""L0 embedding criterion: test functions, transforms, pairings, planar measures."""

from .measure2d import (RepresentingMeasure2D, log_cos_coefficients, recover_measure_2d,
                        representation_residuals, symmetric_weights, verify_representation)
from .pairing import AngularIntegrals, L0Report, PairingResult, l0_scan, log_pairing
from .testfunctions import (FamilySpec, Term, TestFunction, bump_radial, cosine_factor, family_axes,
                            radial_test_function, standard_family, zonal_square)
from .transform import (Moments, RadialTransform, SpectralTransform, fourier_of_test_function,
                        hankel_moments, radial_transform)

__all__ = [
    "AngularIntegrals", "FamilySpec", "L0Report", "Moments", "PairingResult", "RadialTransform",
    "RepresentingMeasure2D", "SpectralTransform", "Term", "TestFunction", "bump_radial", "cosine_factor",
    "family_axes", "fourier_of_test_function", "hankel_moments", "l0_scan", "log_cos_coefficients",
    "log_pairing", "radial_test_function", "radial_transform", "recover_measure_2d",
    "representation_residuals", "standard_family", "symmetric_weights", "verify_representation",
    "zonal_square",
]

"""Numerical companion for explicit Arakelov energy bounds on Riemann surfaces."""

from .elkies import BoundInputs, BoundReport, a_n, corollary_bound, energy, merkl_c0, theorem1_bound, verify_theorem1
from .errors import ArakelovError, InputError, ViolationDetected
from .fay import SectionSystem, norm_matrix, verify_fay_identity
from .green import GreenFunction, TorusChartAtlas, build_torus_atlas
from .integrals import estimate_an, estimate_hx
from .surface import EllipticSurface, JacobianPoint, PeriodMatrix, PointConfiguration, SeededSampler
from .theta import c_g_rho, theta_norm, theta_series

__version__ = "0.1.0"

__all__ = [
    "ArakelovError",
    "BoundInputs",
    "BoundReport",
    "EllipticSurface",
    "GreenFunction",
    "InputError",
    "JacobianPoint",
    "PeriodMatrix",
    "PointConfiguration",
    "SectionSystem",
    "SeededSampler",
    "TorusChartAtlas",
    "ViolationDetected",
    "a_n",
    "build_torus_atlas",
    "c_g_rho",
    "corollary_bound",
    "energy",
    "estimate_an",
    "estimate_hx",
    "merkl_c0",
    "norm_matrix",
    "theorem1_bound",
    "theta_norm",
    "theta_series",
    "verify_fay_identity",
    "verify_theorem1",
]

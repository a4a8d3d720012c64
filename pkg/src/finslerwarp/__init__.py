"""Curvature, volume and isotropy checks for warped-product Finsler metrics."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .catalog import catalog_metric, parse_catalog
from .curvature import curvature_report, e_tensor, f_hessian, s_curvature, trace_density
from .equivalence import (
    EquivalenceReport,
    IsotropyFit,
    classify,
    e_residual,
    fit_isotropy_constant,
    s_residual,
    theorem_identity_residual,
)
from .errors import FinslerError
from .expr import parse
from .jets import DEFAULT_ORDER, Jet, JetOrder, jet_seed
from .metric import (
    MetricSpec,
    PointTangent,
    det_fundamental,
    fundamental_tensor,
    make_metric,
    scalar_fields,
    validity_scan,
)
from .spray import spray_scalars, spray_vector
from .volume import g_factor, k_factor, sigma_density, volume_factors

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "DEFAULT_ORDER",
    "EquivalenceReport",
    "FinslerError",
    "IsotropyFit",
    "Jet",
    "JetOrder",
    "MetricSpec",
    "PointTangent",
    "catalog_metric",
    "classify",
    "curvature_report",
    "det_fundamental",
    "e_residual",
    "e_tensor",
    "f_hessian",
    "fit_isotropy_constant",
    "fundamental_tensor",
    "g_factor",
    "jet_seed",
    "k_factor",
    "make_metric",
    "parse",
    "parse_catalog",
    "s_curvature",
    "s_residual",
    "scalar_fields",
    "sigma_density",
    "spray_scalars",
    "spray_vector",
    "theorem_identity_residual",
    "trace_density",
    "validity_scan",
    "volume_factors",
]

"""Busemann-Hausdorff and Holmes-Thompson volume densities.

Polar reduction of the unit F-ball in the fiber coordinate s = v1/alpha_bar
gives, with ``c_n = int_0^pi sin^(n-2) t dt``::

    k_BH(r) = int_R phi(r, s)^(-n) ds          sigma_BH = c_n / k_BH
    k_HT(r) = int_R upsilon(r, s) ds           sigma_HT = k_HT / c_n
    upsilon = phi phi_ss (phi - s phi_s)^(n-2)

The S-curvature coefficient is ``g(r) = -d/dr log sigma(r)``; its
r-derivative is taken under the integral sign from the r-jet of the
integrand.  Integrals over R use s = tan(t) on (-pi/2, pi/2) with
composite 16-point Gauss-Legendre panels, doubled until two successive
estimates agree to 1e-10 relative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidInputError, QuadratureError
from .jets import JetOrder, align
from .metric import MetricSpec, base_jets

KINDS = ("BH", "HT")
GL_POINTS = 16
REL_TOL = 1e-10
MAX_DOUBLINGS = 12
TAIL_DELTAS = (1e-2, 1e-6)
TAIL_GROWTH = 10.0


def normalize_kind(kind: str) -> str:
    k = str(kind).upper()
    if k not in KINDS:
        raise InvalidInputError(f"volume kind must be 'bh' or 'ht', got {kind!r}")
    return k


def sine_power_integral(n: int) -> float:
    """c_n = int_0^pi sin^(n-2)(t) dt."""
    return math.sqrt(math.pi) * math.gamma((n - 1) / 2) / math.gamma(n / 2)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@lru_cache(maxsize=None)
def _gl_rule(panels: int):
    x, w = np.polynomial.legendre.leggauss(GL_POINTS)
    h = math.pi / panels
    left = -math.pi / 2 + h * np.arange(panels)
    t = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    wt = np.tile(0.5 * h * w, panels)
    return t, wt


def integrand(spec: MetricSpec, r: float, kind: str, s):
    """(value, d/dr value) of the s-integrand of k(r) at the points ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n = spec.n
    r_arr = np.full_like(s, float(r))
    if kind == "BH":
        _, _, _, phi = base_jets(spec, r_arr, s, JetOrder(1, 0))
        f = phi ** (-n)
    else:
        _, sj, _, phi = base_jets(spec, r_arr, s, JetOrder(1, 2))
        phi_s = phi.diff_s()
        phi_ss = phi_s.diff_s()
        p, ps, pss, s0 = align(phi, phi_s, phi_ss, sj)
        f = p * pss * (p - s0 * ps) ** (n - 2)
    return f.coeff[0, 0], f.coeff[1, 0]


def _transformed(spec, r, kind, t):
    s = np.tan(t)
    f0, f1 = integrand(spec, r, kind, s)
    sec2 = 1.0 + s * s
    return f0 * sec2, f1 * sec2


def _tail_check(spec, r, kind):
    t = np.array([math.pi / 2 - d for d in TAIL_DELTAS] + [-math.pi / 2 + d for d in TAIL_DELTAS])
    try:
        f0, _ = _transformed(spec, r, kind, t)
    except DomainError as exc:
        raise DomainError(f"{kind} integrand undefined in the far tail at r={r}: {exc.message}") from exc
    if not np.all(np.isfinite(f0)):
        raise DomainError(f"{kind} integrand not finite in the far tail at r={r}")
    for near, far in ((f0[0], f0[1]), (f0[2], f0[3])):
        if abs(far) > TAIL_GROWTH * abs(near) + 1e-300:
            raise DomainError(f"{kind} integrand does not decay (non-integrable tail) at r={r}")


@dataclass(frozen=True)
class ReducedIntegral:
    value: float
    r_derivative: float
    panels: int
    previous: float  # estimate with half as many panels


def reduced_integral(spec: MetricSpec, r: float, kind: str) -> ReducedIntegral:
    kind = normalize_kind(kind)
    _tail_check(spec, r, kind)
    prev = None
    panels = 1
    for _ in range(MAX_DOUBLINGS + 1):
        t, wt = _gl_rule(panels)
        f0, f1 = _transformed(spec, r, kind, t)
        if not (np.all(np.isfinite(f0)) and np.all(np.isfinite(f1))):
            raise DomainError(f"{kind} integrand not finite at r={r}")
        k = math.fsum(wt * f0)
        kr = math.fsum(wt * f1)
        if prev is not None:
            dk = abs(k - prev[0])
            dkr = abs(kr - prev[1])
            if dk <= REL_TOL * abs(k) and dkr <= REL_TOL * max(abs(kr), abs(k)):
                return ReducedIntegral(k, kr, panels, prev[0])
        prev = (k, kr)
        panels *= 2
    raise QuadratureError(f"{kind} integral did not converge after {MAX_DOUBLINGS} panel doublings at r={r}")


@dataclass(frozen=True)
class VolumeFactors:
    kind: str
    r: float
    k_value: float
    k_r: float
    sigma: float
    g_value: float
    g_paper: float  # the printed -r k'/k, for comparison only
    panels: int

    def as_dict(self):
        return {
            "kind": self.kind, "r": self.r, "k": self.k_value, "k_r": self.k_r,
            "sigma": self.sigma, "g": self.g_value, "g_paper": self.g_paper, "panels": self.panels,
        }


@lru_cache(maxsize=8192)
def volume_factors(spec: MetricSpec, r: float, kind: str = "BH") -> VolumeFactors:
    kind = normalize_kind(kind)
    r = float(r)
    ri = reduced_integral(spec, r, kind)
    k, kr = ri.value, ri.r_derivative
    if k <= 0:
        raise DomainError(f"{kind} reduced integral is not positive at r={r}")
    c = sine_power_integral(spec.n)
    if kind == "BH":
        sigma, g = c / k, kr / k
    else:
        sigma, g = k / c, -kr / k
    return VolumeFactors(kind, r, k, kr, sigma, g, -r * kr / k, ri.panels)


def k_factor(spec: MetricSpec, r: float, kind: str = "BH") -> float:
    return volume_factors(spec, r, kind).k_value


def sigma_density(spec: MetricSpec, r: float, kind: str = "BH") -> float:
    return volume_factors(spec, r, kind).sigma


def g_factor(spec: MetricSpec, r: float, kind: str = "BH") -> float:
    """g(r) = -d/dr log sigma(r)."""
    return volume_factors(spec, r, kind).g_value

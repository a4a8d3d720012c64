"""E-curvature, F-Hessian, spray trace density and S-curvature.

The spray divergence of a warped metric is ``sum_m dG^m/dv^m = alpha_bar T(r, s)``.
Differentiating ``G^1 = Phi alpha_bar^2`` and ``G^a = Psi alpha_bar v^a``
directly gives the *definitional* density

    T = Phi_s + n Psi - s Psi_s

because ``sum_a s_{v^a} v^a = -s`` for s = v1/alpha_bar.  The *printed*
density ``Phi_s + n Psi`` drops the last term.  E is half the v-Hessian of
``alpha_bar T`` and S = alpha_bar (T + g(r) s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .jets import DEFAULT_ORDER, Jet, JetOrder, align
from .metric import MetricSpec, PointTangent, base_jets, hessian_1hom
from .spray import spray_jets
from .volume import g_factor, normalize_kind

MODES = ("definitional", "printed")


def _check(mode, name="mode"):
    if mode not in MODES:
        raise InvalidInputError(f"{name} must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class TraceDensity:
    mode: str
    spray_mode: str
    r: float
    s: float
    T: float
    T_s: float
    T_ss: float


def trace_jet(spec: MetricSpec, r, s, mode: str = "definitional", spray_mode: str = "definitional",
              order: JetOrder = DEFAULT_ORDER) -> Jet:
    """Jet of T(r, s) about (r, s); batched for array input."""
    _check(mode)
    phi_j, psi_j = spray_jets(spec, r, s, spray_mode, order)
    phi_s = phi_j.diff_s()
    if mode == "printed":
        a, b = align(phi_s, psi_j)
        return a + spec.n * b
    psi_s = psi_j.diff_s()
    a, b, c = align(phi_s, psi_j, psi_s)
    return a + spec.n * b - a.variable_like("var_s") * c


def trace_density(spec: MetricSpec, r: float, s: float, mode: str = "definitional",
                  spray_mode: str = "definitional", check_domain: bool = True) -> TraceDensity:
    if check_domain:
        spec.require(r, s)
    t = trace_jet(spec, r, s, mode, spray_mode)
    return TraceDensity(mode, spray_mode, float(r), float(s),
                        float(t.coeff[0, 0]), float(t.coeff[0, 1]), 2.0 * float(t.coeff[0, 2]))


def _check_point(spec, pt, check_domain):
    if pt.n != spec.n:
        raise InvalidInputError(f"tangent has dimension {pt.n}, metric has n = {spec.n}")
    if check_domain:
        spec.require(pt.r, pt.s)


def f_hessian(spec: MetricSpec, pt: PointTangent, check_domain: bool = True) -> np.ndarray:
    """F_{v^i v^j} of F = alpha_bar phi(r, s)."""
    _check_point(spec, pt, check_domain)
    _, _, _, phi = base_jets(spec, pt.r, pt.s, JetOrder(0, 2))
    p = phi.value
    ps = float(phi.coeff[0, 1])
    pss = 2.0 * float(phi.coeff[0, 2])
    return np.array(hessian_1hom(p, ps, pss, pt.s, pt.v_bar), dtype=float)


def e_tensor(spec: MetricSpec, pt: PointTangent, mode: str = "definitional",
             spray_mode: str = "definitional", check_domain: bool = True) -> np.ndarray:
    """E_ij = (1/2) d^2/dv^i dv^j (sum_m dG^m/dv^m).

    ``definitional`` takes half the exact v-Hessian of alpha_bar T(r, s);
    ``printed`` assembles the published closed form verbatim (no factor 1/2,
    1/alpha_bar^3 prefactor on the v_i v_j block) from Phi, Psi of
    ``spray_mode``.
    """
    _check(mode)
    _check(spray_mode, "spray_mode")
    _check_point(spec, pt, check_domain)
    s = pt.s
    if mode == "definitional":
        t = trace_jet(spec, pt.r, s, "definitional", spray_mode)
        T, T_s, T_ss = float(t.coeff[0, 0]), float(t.coeff[0, 1]), 2.0 * float(t.coeff[0, 2])
        return 0.5 * np.array(hessian_1hom(T, T_s, T_ss, s, pt.v_bar), dtype=float)

    phi_j, psi_j = spray_jets(spec, pt.r, s, spray_mode)
    f = math.factorial
    P = [float(phi_j.coeff[0, k]) * f(k) for k in range(4)]
    Q = [float(psi_j.coeff[0, k]) * f(k) for k in range(3)]
    n = spec.n
    ab = pt.alpha_bar
    vb = pt.v_bar
    k = len(vb)
    top = P[3] + n * Q[2]
    diag = (P[1] - s * P[2]) + n * (Q[0] - s * Q[1])
    outer = n * s * s * Q[2] + s * s * P[3] + s * (P[2] + n * Q[1]) - (P[1] + n * Q[0])
    E = np.empty((k + 1, k + 1))
    E[0, 0] = top / ab
    for a in range(k):
        E[0, a + 1] = E[a + 1, 0] = -(s / ab) * vb[a] * top
        for b in range(k):
            E[a + 1, b + 1] = (diag / ab) * (a == b) + vb[a] * vb[b] / ab**3 * outer
    return E


def s_curvature(spec: MetricSpec, pt: PointTangent, volume_kind: str = "BH", mode: str = "definitional",
                spray_mode: str = "definitional", check_domain: bool = True) -> float:
    """S = alpha_bar (T(r, s) + g(r) s)."""
    _check_point(spec, pt, check_domain)
    kind = normalize_kind(volume_kind)
    td = trace_density(spec, pt.r, pt.s, mode, spray_mode, check_domain=False)
    return pt.alpha_bar * (td.T + g_factor(spec, pt.r, kind) * pt.s)


@dataclass(frozen=True)
class CurvatureReport:
    point: PointTangent
    volume_kind: str
    mode: str
    E: np.ndarray
    S: float
    F_hessian: np.ndarray

    def as_dict(self):
        return {
            "r": self.point.r,
            "v": self.point.vector.tolist(),
            "s": self.point.s,
            "volume_kind": self.volume_kind,
            "mode": self.mode,
            "E": self.E.tolist(),
            "S": self.S,
            "F_hessian": self.F_hessian.tolist(),
        }


def curvature_report(spec: MetricSpec, pt: PointTangent, volume_kind: str = "BH",
                     mode: str = "definitional") -> CurvatureReport:
    kind = normalize_kind(volume_kind)
    return CurvatureReport(
        pt, kind, mode,
        e_tensor(spec, pt, mode),
        s_curvature(spec, pt, kind, mode),
        f_hessian(spec, pt),
    )

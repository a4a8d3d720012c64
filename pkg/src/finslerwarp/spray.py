"""Spray scalars Phi, Psi of a warped-product metric.

For the flat base the spray is ``G^1 = Phi alpha_bar^2`` and
``G^a = Psi alpha_bar v^a`` with Phi, Psi functions of (r, s) only.  Two
evaluation modes are provided:

``printed``
    the published closed-form expressions in chi, Lambda, U, V, W, X.
``definitional``
    ``G^i = (1/4) g^{il} ([F^2]_{u^m v^l} v^m - [F^2]_{u^l})`` solved at the
    reduced tangent (s, 1, 0, ..., 0), where alpha_bar = 1 so
    ``Phi = G^1`` and ``Psi = G^2``.  The linear solve runs in jet
    arithmetic, so s-derivatives come out exactly.

The two modes disagree whenever w depends on r (see ``spray_discrepancy``);
the definitional mode reproduces the geodesic equations and is the default
everywhere downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .jets import DEFAULT_ORDER, Jet, JetOrder, align
from .metric import MetricSpec, PointTangent, base_jets, gradient_2hom, hessian_2hom, auxiliary_jets

MODES = ("definitional", "printed")
SCALAR_FIELDS = ("Phi", "Phi_s", "Phi_ss", "Phi_sss", "Psi", "Psi_s", "Psi_ss", "Psi_sss")


@dataclass(frozen=True)
class SprayScalars:
    mode: str
    r: float
    s: float
    Phi: float
    Phi_s: float
    Phi_ss: float
    Phi_sss: float
    Psi: float
    Psi_s: float
    Psi_ss: float
    Psi_sss: float

    def as_dict(self):
        return {k: getattr(self, k) for k in SCALAR_FIELDS}


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")


def solve_linear(A, b):
    """Gaussian elimination over jets (or floats) without pivoting.

    Only used on symmetric positive definite systems, where the unpivoted
    elimination is stable.
    """
    n = len(b)
    A = [list(row) for row in A]
    b = list(b)
    for k in range(n):
        piv = A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / piv
            for j in range(k + 1, n):
                A[i][j] = A[i][j] - f * A[k][j]
            b[i] = b[i] - f * b[k]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc = acc - A[i][j] * x[j]
        x[i] = acc / A[i][i]
    return x


def _printed_jets(spec: MetricSpec, r, s, order: JetOrder):
    _, sj, w, _ = base_jets(spec, r, s, order, need_phi=False)
    q = auxiliary_jets(w, sj)
    s_, U, V, W, X, chi_r, W_r = align(q["s"], q["U"], q["V"], q["W"], q["X"], q["chi_r"], q["W_r"])
    a = W_r - chi_r
    phi_ = 0.25 * (a * U + s_ * chi_r * V)
    psi_ = 0.25 * (a * V + s_ * chi_r * (W + X))
    return phi_, psi_


def _definitional_jets(spec: MetricSpec, r, s, order: JetOrder):
    _, sj, w, _ = base_jets(spec, r, s, order, need_phi=False)
    w_s = w.diff_s()
    w_ss = w_s.diff_s()
    w_r = w.diff_r()
    w_rs = w_r.diff_s()
    w, w_s, w_ss, w_r, w_rs, s_ = align(w, w_s, w_ss, w_r, w_rs, sj)
    v_bar = (1.0,) + (0.0,) * (spec.n - 2)
    # F^2 = alpha_bar^2 w(r, v1/alpha_bar); only u^1 = r enters on a flat base
    hess = hessian_2hom(w, w_s, w_ss, s_, v_bar)
    mixed = gradient_2hom(w_r, w_rs, s_, v_bar)  # d/dv^l of [F^2]_r
    rhs = [s_ * m for m in mixed]  # times v^1 = s
    rhs[0] = rhs[0] - w_r
    # G = (1/4) g^{-1} rhs and g = hess / 2
    G = solve_linear(hess, rhs)
    return 0.5 * G[0], 0.5 * G[1]


def spray_jets(spec: MetricSpec, r, s, mode: str = "definitional", order: JetOrder = DEFAULT_ORDER):
    """Jets of (Phi, Psi) about (r, s); batched when r or s are arrays."""
    _check_mode(mode)
    fn = _definitional_jets if mode == "definitional" else _printed_jets
    return fn(spec, r, s, order)


def _scalars(mode, r, s, phi_j: Jet, psi_j: Jet) -> SprayScalars:
    def d(j, k):
        return float(j.coeff[0, k]) * math.factorial(k)

    return SprayScalars(
        mode, float(r), float(s),
        d(phi_j, 0), d(phi_j, 1), d(phi_j, 2), d(phi_j, 3),
        d(psi_j, 0), d(psi_j, 1), d(psi_j, 2), d(psi_j, 3),
    )


def spray_scalars_printed(spec: MetricSpec, r: float, s: float, check_domain: bool = True) -> SprayScalars:
    if check_domain:
        spec.require(r, s)
    return _scalars("printed", r, s, *spray_jets(spec, r, s, "printed"))


def spray_scalars_definitional(spec: MetricSpec, r: float, s: float, check_domain: bool = True) -> SprayScalars:
    if check_domain:
        spec.require(r, s)
    return _scalars("definitional", r, s, *spray_jets(spec, r, s, "definitional"))


def spray_scalars(spec, r, s, mode="definitional", check_domain=True) -> SprayScalars:
    _check_mode(mode)
    if mode == "printed":
        return spray_scalars_printed(spec, r, s, check_domain)
    return spray_scalars_definitional(spec, r, s, check_domain)


def spray_vector(spec: MetricSpec, pt: PointTangent, mode: str = "definitional", check_domain: bool = True) -> np.ndarray:
    """(G^1, ..., G^n) = (Phi alpha_bar^2, Psi alpha_bar v^2, ..., Psi alpha_bar v^n)."""
    sc = spray_scalars(spec, pt.r, pt.s, mode, check_domain)
    ab = pt.alpha_bar
    return np.array([sc.Phi * ab * ab] + [sc.Psi * ab * va for va in pt.v_bar])


@dataclass(frozen=True)
class SprayDiscrepancy:
    points: int
    max_abs: dict
    mean_abs: dict
    argmax: dict  # field -> (r, s) of the largest gap

    def as_dict(self):
        return {"points": self.points, "max_abs": self.max_abs, "mean_abs": self.mean_abs,
                "argmax": {k: list(v) for k, v in self.argmax.items()}}


def spray_discrepancy(spec: MetricSpec, r_grid, s_grid) -> SprayDiscrepancy:
    """Printed minus definitional Phi, Psi (and s-derivatives) over a grid."""
    R, S = np.meshgrid(np.asarray(r_grid, float), np.asarray(s_grid, float), indexing="ij")
    rf, sf = R.ravel(), S.ravel()
    pp, qp = spray_jets(spec, rf, sf, "printed")
    pd, qd = spray_jets(spec, rf, sf, "definitional")
    max_abs, mean_abs, argmax = {}, {}, {}
    for name, jp, jd in (("Phi", pp, pd), ("Psi", qp, qd)):
        for k, suffix in enumerate(("", "_s", "_ss", "_sss")):
            gap = np.abs(jp.coeff[0, k] - jd.coeff[0, k]) * math.factorial(k)
            i = int(np.argmax(gap))
            max_abs[name + suffix] = float(gap[i])
            mean_abs[name + suffix] = math.fsum(gap) / gap.size
            argmax[name + suffix] = (float(rf[i]), float(sf[i]))
    return SprayDiscrepancy(int(rf.size), max_abs, mean_abs, argmax)

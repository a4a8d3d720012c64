"""Scalar isotropy tests for S- and E-curvature.

With T(r, s) the spray trace density and g(r) = -d/dr log sigma:

    A   = T + g s - (n+1) c phi           S = (n+1) c F   iff  A == 0 in s
    D   = T - (n+1) c phi
    R_b = D - s D_s,  R_a = D_ss          E = ((n+1)/2) c F_vv  iff  R_b == R_a == 0

``A - s A_s`` equals ``R_b`` identically (the g s term drops out), which is
the whole content of "isotropic S implies isotropic E".  The converse
needs D to be linear in s with slope exactly -g(r); ``converse_gap``
measures how far that is from holding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import trace_jet
from .errors import FitError, ForwardImplicationViolation, InvalidInputError
from .jets import DEFAULT_ORDER, align
from .metric import MetricSpec, base_jets
from .volume import g_factor, normalize_kind

DEFAULT_TOL = 1e-7
MIN_GRID = 8


def _as_grid(s):
    return np.atleast_1d(np.asarray(s, dtype=float))


def _jets(spec: MetricSpec, r: float, s, mode: str):
    """Aligned (T, phi, s) jets about (r, s), batched over s."""
    s = _as_grid(s)
    r_arr = np.full_like(s, float(r))
    t = trace_jet(spec, r_arr, s, mode, mode, DEFAULT_ORDER)
    _, sj, _, phi = base_jets(spec, r_arr, s, DEFAULT_ORDER)
    return align(t, phi, sj)


def _d_jet(spec, c, r, s, mode):
    t, phi, sj = _jets(spec, r, s, mode)
    return t - (spec.n + 1) * c * phi, sj


def _a_jet(spec, kind, c, r, s, mode):
    t, phi, sj = _jets(spec, r, s, mode)
    g = g_factor(spec, float(r), normalize_kind(kind))
    return t + g * sj - (spec.n + 1) * c * phi, sj


def _euler(j, sj):
    """j - s j_s as a jet."""
    a, b, s = align(j, j.diff_s(), sj)
    return a - s * b


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x[0]) if x.size == 1 else x


def s_residual(spec: MetricSpec, kind: str, c: float, r: float, s, mode: str = "definitional"):
    """A(r, s) = T + g(r) s - (n+1) c phi."""
    spec.require(r, s)
    a, _ = _a_jet(spec, kind, c, r, s, mode)
    return _out(a.coeff[0, 0])


def e_residual(spec: MetricSpec, c: float, r: float, s, mode: str = "definitional"):
    """(R_b, R_a) = (D - s D_s, D_ss) with D = T - (n+1) c phi."""
    spec.require(r, s)
    d, sj = _d_jet(spec, c, r, s, mode)
    rb = _euler(d, sj)
    return _out(rb.coeff[0, 0]), _out(2.0 * d.coeff[0, 2])


def redundancy_residual(spec: MetricSpec, c: float, r: float, s, mode: str = "definitional"):
    """|d/ds R_b + s R_a|, with d/ds R_b taken from the jet of R_b itself."""
    spec.require(r, s)
    d, sj = _d_jet(spec, c, r, s, mode)
    rb = _euler(d, sj)
    lhs = rb.coeff[0, 1]
    rhs = -sj.coeff[0, 0] * 2.0 * d.coeff[0, 2]
    return _out(np.abs(lhs - rhs))


def theorem_identity_residual(spec: MetricSpec, c: float, kind: str, r: float, s, mode: str = "definitional"):
    """|R_b - (A - s A_s)|: zero for every metric, isotropic or not."""
    spec.require(r, s)
    a, sj = _a_jet(spec, kind, c, r, s, mode)
    lhs = _euler(a, sj).coeff[0, 0]
    d, _ = _d_jet(spec, c, r, s, mode)
    rb = _euler(d, sj).coeff[0, 0]
    return _out(np.abs(rb - lhs))


@dataclass(frozen=True)
class ConverseCheck:
    r: float
    s0: float
    s1: float
    lhs: float  # A(s1)/s1 - A(s0)/s0
    rhs: float  # -int_{s0}^{s1} R_b / sigma^2
    gap: float


def converse_integration_check(spec: MetricSpec, c: float, kind: str, r: float, s0: float, s1: float,
                               mode: str = "definitional", panels: int = 8) -> ConverseCheck:
    """Integrate d/ds (D/s) = -R_b/s^2 from s0 to s1 and compare with the A/s difference.

    A/s and D/s differ by the constant g(r), so the check is the integrated
    form of A - s A_s = R_b with g(r) as the integration constant.
    """
    if s0 == 0 or s1 == 0 or (s0 > 0) != (s1 > 0):
        raise InvalidInputError("s0 and s1 must be non-zero and of the same sign")
    spec.require(r, [s0, s1])
    a = s_residual(spec, kind, c, r, np.array([s0, s1]), mode)
    lhs = a[1] / s1 - a[0] / s0
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(s0, s1, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    rb, _ = e_residual(spec, c, r, nodes, mode)
    rhs = -math.fsum(weights * rb / nodes**2)
    return ConverseCheck(float(r), float(s0), float(s1), float(lhs), rhs, float(abs(lhs - rhs)))


@dataclass(frozen=True)
class IsotropyFit:
    kind: str  # "S" or "E"
    volume_kind: str | None
    r: float
    c_fit: float
    kappa_fit: float | None
    rms_residual: float
    max_residual: float
    s_grid: tuple = field(repr=False)

    def as_dict(self):
        return {
            "kind": self.kind, "volume_kind": self.volume_kind, "r": self.r,
            "c_fit": self.c_fit, "kappa_fit": self.kappa_fit,
            "rms_residual": self.rms_residual, "max_residual": self.max_residual,
        }


def _check_grid(spec, r, s):
    if s.size < MIN_GRID:
        raise InvalidInputError(f"s_grid needs at least {MIN_GRID} points, got {s.size}")
    spec.require(r, s)


def _stats(res):
    res = np.abs(np.asarray(res, dtype=float))
    return math.sqrt(math.fsum(res * res) / res.size), float(res.max())


def fit_isotropy_constant(spec: MetricSpec, kind_or_E: str, r: float, s_grid, mode: str = "definitional") -> IsotropyFit:
    """Least-squares isotropy constant c at fixed r.

    ``kind_or_E`` is "BH"/"HT" (S-curvature with that volume) or "E".
    Both problems are linear in c: for S the residual is A, for E it is R_b
    (whose vanishing forces R_a = 0 away from s = 0).
    """
    s = _as_grid(s_grid)
    _check_grid(spec, r, s)
    n1 = spec.n + 1
    t, phi, sj = _jets(spec, r, s, mode)
    T, T_s, T_ss = t.coeff[0, 0], t.coeff[0, 1], 2.0 * t.coeff[0, 2]
    p, p_s, p_ss = phi.coeff[0, 0], phi.coeff[0, 1], 2.0 * phi.coeff[0, 2]
    if str(kind_or_E).upper() == "E":
        y = T - s * T_s
        b = n1 * (p - s * p_s)
        den = math.fsum(b * b)
        if not den > 0:
            raise FitError("degenerate normal equation: sum (phi - s phi_s)^2 = 0")
        c = math.fsum(y * b) / den
        rb = y - c * b
        ra = T_ss - c * n1 * p_ss
        rms, mx = _stats(rb)
        mx = max(mx, float(np.max(np.abs(ra))))
        return IsotropyFit("E", None, float(r), c, n1 * c, rms, mx, tuple(s.tolist()))
    kind = normalize_kind(kind_or_E)
    g = g_factor(spec, float(r), kind)
    y = T + g * s
    b = n1 * p
    den = math.fsum(b * b)
    if not den > 0:
        raise FitError("degenerate normal equation: sum phi^2 = 0")
    c = math.fsum(y * b) / den
    rms, mx = _stats(y - c * b)
    return IsotropyFit("S", kind, float(r), c, None, rms, mx, tuple(s.tolist()))


def fit_from_residuals(residual, phi, n: int, c_trial: float = 0.0) -> float:
    """Closed-form c from residuals r_i = y_i - (n+1) c_trial phi_i."""
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(residual, dtype=float) + (n + 1) * c_trial * phi
    b = (n + 1) * phi
    den = math.fsum(b * b)
    if not den > 0:
        raise FitError("degenerate normal equation: sum phi^2 = 0")
    return math.fsum(y * b) / den


@dataclass(frozen=True)
class RadialRecord:
    r: float
    s_fit: IsotropyFit
    e_fit: IsotropyFit
    g: float
    a_fit: float  # slope of D(r, .) at the E-fitted c
    identity_max: float
    forward_e_residual: float  # E residual evaluated at the S-fitted c

    def as_dict(self):
        return {
            "r": self.r, "S": self.s_fit.as_dict(), "E": self.e_fit.as_dict(),
            "g": self.g, "a_fit": self.a_fit, "identity_max": self.identity_max,
            "forward_e_residual": self.forward_e_residual,
        }


@dataclass(frozen=True)
class EquivalenceReport:
    volume_kind: str
    mode: str
    tol: float
    records: tuple
    verdict_S: bool
    verdict_E: bool
    theorem_identity_max: float
    forward_implication_ok: bool
    converse_gap: float | None

    def as_dict(self):
        return {
            "volume_kind": self.volume_kind, "mode": self.mode, "tol": self.tol,
            "verdict_S": self.verdict_S, "verdict_E": self.verdict_E,
            "theorem_identity_max": self.theorem_identity_max,
            "forward_implication_ok": self.forward_implication_ok,
            "converse_gap": self.converse_gap,
            "records": [rec.as_dict() for rec in self.records],
        }


def _passes(fit: IsotropyFit, tol: float) -> bool:
    return fit.max_residual <= tol * (1.0 + abs(fit.c_fit))


def classify(spec: MetricSpec, volume_kind: str, r_grid, s_grid, mode: str = "definitional",
             tol: float = DEFAULT_TOL, strict: bool = True) -> EquivalenceReport:
    """Fit c per r for S and E, decide both verdicts and probe both directions.

    The forward direction is a hard check: with ``strict`` a violation
    raises ForwardImplicationViolation carrying the full report.
    """
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    kind = normalize_kind(volume_kind)
    rs = _as_grid(r_grid)
    s = _as_grid(s_grid)
    n1 = spec.n + 1
    records = []
    for r in rs:
        sf = fit_isotropy_constant(spec, kind, r, s, mode)
        ef = fit_isotropy_constant(spec, "E", r, s, mode)
        ident = float(np.max(theorem_identity_residual(spec, sf.c_fit, kind, r, s, mode)))
        rb, ra = e_residual(spec, sf.c_fit, r, s, mode)
        fwd = float(max(np.max(np.abs(rb)), np.max(np.abs(ra))))
        t, phi, _ = _jets(spec, r, s, mode)
        d = t.coeff[0, 0] - n1 * ef.c_fit * phi.coeff[0, 0]
        a_fit = math.fsum(d * s) / math.fsum(s * s)
        records.append(RadialRecord(float(r), sf, ef, g_factor(spec, float(r), kind), a_fit, ident, fwd))
    verdict_S = all(_passes(rec.s_fit, tol) for rec in records)
    verdict_E = all(_passes(rec.e_fit, tol) for rec in records)
    forward_ok = (not verdict_S) or (
        verdict_E and all(rec.forward_e_residual <= tol * (1.0 + abs(rec.s_fit.c_fit)) for rec in records)
    )
    gap = max(abs(rec.a_fit + rec.g) for rec in records) if verdict_E else None
    report = EquivalenceReport(
        kind, mode, float(tol), tuple(records), verdict_S, verdict_E,
        max(rec.identity_max for rec in records), forward_ok, gap,
    )
    if strict and not forward_ok:
        raise ForwardImplicationViolation(
            "isotropic S-curvature without isotropic E-curvature at the same constant",
            report=report.as_dict(),
        )
    return report

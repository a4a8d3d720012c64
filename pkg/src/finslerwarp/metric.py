"""Warped-product Finsler metrics F = alpha_bar * phi(r, s) on I x R^(n-1).

The base manifold is flat Euclidean space, so ``a_ij`` is the identity, the
lowered components ``v_a`` equal ``v^a`` and the base spray vanishes.  The
scalar-level quantities (chi, Lambda, the determinant) depend on phi only
and are unaffected by that choice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as expr_mod
from .errors import DegenerateMetricError, DomainError, FinslerError, InvalidInputError, ValidityError
from .jets import Jet, JetOrder, align, jet_apply, seed_pair

VALIDITY_GRID = 33
CONDITIONS = ("w_pos", "w_ss_pos", "chi_pos", "Lambda_pos", "tensor_pd")


@dataclass(frozen=True)
class MetricSpec:
    n: int
    expr: expr_mod.Expr
    given_as: str = "w"
    r_domain: tuple = (0.5, 3.0)
    s_domain: tuple = (-2.0, 2.0)
    source: str = ""

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise InvalidInputError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if self.given_as not in ("w", "phi"):
            raise InvalidInputError(f"given_as must be 'w' or 'phi', got {self.given_as!r}")
        for name in ("r_domain", "s_domain"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidInputError(f"{name} must be a non-empty finite interval, got {(lo, hi)}")
        if not self.source:
            object.__setattr__(self, "source", str(self.expr))

    def contains(self, r, s) -> bool:
        (r0, r1), (s0, s1) = self.r_domain, self.s_domain
        return bool(np.all((r0 <= np.asarray(r)) & (np.asarray(r) <= r1)) and np.all((s0 <= np.asarray(s)) & (np.asarray(s) <= s1)))

    def require(self, r, s):
        if not self.contains(r, s):
            raise InvalidInputError(
                f"(r, s) = ({r}, {s}) outside the metric domain r in {self.r_domain}, s in {self.s_domain}"
            )

    def phi_scalar(self, r: float, s: float) -> float:
        v = expr_mod.eval_scalar(self.expr, r, s)
        if self.given_as == "phi":
            return v
        if v < 0:
            raise DomainError(f"w < 0 at ({r}, {s})")
        return math.sqrt(v)

    def phi_array(self, r, s):
        v = expr_mod.eval_array(self.expr, r, s)
        if self.given_as == "phi":
            return v
        if np.any(v < 0):
            raise DomainError("w < 0 inside the evaluation set")
        return np.sqrt(v)


@dataclass(frozen=True)
class MetricScalars:
    r: float
    s: float
    w: float
    w_s: float
    w_ss: float
    w_r: float
    w_rs: float
    chi: float
    chi_s: float
    chi_r: float
    Lambda: float
    U: float
    V: float
    W: float
    X: float
    W_r: float
    phi: float
    phi_s: float
    phi_ss: float


@dataclass(frozen=True)
class PointTangent:
    """A point (r, base_point) of I x R^(n-1) with a tangent (v1, v_bar)."""

    r: float
    v1: float
    v_bar: tuple
    base_point: tuple = None

    def __post_init__(self):
        vb = tuple(float(x) for x in self.v_bar)
        object.__setattr__(self, "v_bar", vb)
        bp = tuple(float(x) for x in (self.base_point if self.base_point is not None else (0.0,) * len(vb)))
        object.__setattr__(self, "base_point", bp)
        if len(bp) != len(vb) or not vb:
            raise InvalidInputError("base_point and v_bar must have the same length n-1 >= 1")
        if not all(map(math.isfinite, (self.r, self.v1) + vb + bp)):
            raise InvalidInputError("point/tangent components must be finite")
        if self.alpha_bar <= 0:
            raise InvalidInputError("v_bar must be non-zero")

    @classmethod
    def from_vector(cls, r, v, base_point=None):
        v = [float(x) for x in v]
        return cls(float(r), v[0], tuple(v[1:]), base_point)

    @classmethod
    def reduced(cls, r, s, n):
        """The tangent (s, 1, 0, ..., 0): alpha_bar = 1 and fiber ratio s."""
        return cls(float(r), float(s), (1.0,) + (0.0,) * (n - 2))

    @property
    def n(self) -> int:
        return len(self.v_bar) + 1

    @property
    def alpha_bar(self) -> float:
        return math.sqrt(math.fsum(x * x for x in self.v_bar))

    @property
    def s(self) -> float:
        return self.v1 / self.alpha_bar

    @property
    def vector(self) -> np.ndarray:
        return np.array((self.v1,) + self.v_bar)

    @property
    def u(self) -> np.ndarray:
        return np.array((self.r,) + self.base_point)

    def scaled(self, lam: float) -> "PointTangent":
        return PointTangent(self.r, lam * self.v1, tuple(lam * x for x in self.v_bar), self.base_point)


# ---------------------------------------------------------------------------
# flat-base chain rule for homogeneous functions of v


def gradient_2hom(q, q_s, s, v_bar):
    """Gradient in v of alpha_bar^2 * q(s)."""
    ab = math.sqrt(math.fsum(x * x for x in v_bar))
    t = 2 * q - s * q_s
    return [ab * q_s] + [t * va for va in v_bar]


def hessian_2hom(q, q_s, q_ss, s, v_bar):
    """v-Hessian of alpha_bar^2 * q(s); with q = w this is twice g_ij."""
    ab = math.sqrt(math.fsum(x * x for x in v_bar))
    k = len(v_bar)
    c1 = q_s - s * q_ss
    c0 = 2 * q - s * q_s
    H = [[None] * (k + 1) for _ in range(k + 1)]
    H[0][0] = q_ss
    for a in range(k):
        H[0][a + 1] = H[a + 1][0] = c1 * (v_bar[a] / ab)
        for b in range(a, k):
            h = -(s * c1) * (v_bar[a] * v_bar[b] / ab**2)
            if a == b:
                h = h + c0
            H[a + 1][b + 1] = H[b + 1][a + 1] = h
    return H


def hessian_1hom(h, h_s, h_ss, s, v_bar):
    """v-Hessian of alpha_bar * h(s) (any 1-homogeneous warped quantity)."""
    ab = math.sqrt(math.fsum(x * x for x in v_bar))
    k = len(v_bar)
    c0 = h - s * h_s
    c2 = c0 - s * s * h_ss
    H = [[None] * (k + 1) for _ in range(k + 1)]
    H[0][0] = h_ss * (1.0 / ab)
    for a in range(k):
        H[0][a + 1] = H[a + 1][0] = -(s * h_ss) * (v_bar[a] / ab**2)
        for b in range(a, k):
            e = -c2 * (v_bar[a] * v_bar[b] / ab**3)
            if a == b:
                e = e + c0 * (1.0 / ab)
            H[a + 1][b + 1] = H[b + 1][a + 1] = e
    return H


# ---------------------------------------------------------------------------
# jets of the defining function


def base_jets(spec: MetricSpec, r, s, order: JetOrder, need_phi: bool = True):
    """Return (r_seed, s_seed, w_jet, phi_jet) at (r, s).

    With ``need_phi=False`` and a w-defined metric the phi jet is None, so
    callers that only inspect w never take a square root of it.
    """
    rj, sj = seed_pair(r, s, order)
    f = expr_mod.eval_seeded(spec.expr, rj, sj)
    if spec.given_as == "w":
        w = f
        phi = jet_apply("sqrt", w) if need_phi else None
    else:
        phi = f
        w = phi * phi
    return rj, sj, w, phi


def auxiliary_jets(w: Jet, s: Jet) -> dict:
    """chi, Lambda, U, V, W, X and their r-derivatives as jets.

    Quantities without an r-derivative carry order (R, S-2); ``chi_r`` and
    ``W_r`` carry (R-1, S-2).
    """
    w_s = w.diff_s()
    w_ss = w_s.diff_s()
    w_a, w_s_a, w_ss_a, s_a = align(w, w_s, w_ss, s)
    chi = 2 * w_a - s_a * w_s_a
    chi_s = w_s_a - s_a * w_ss_a
    lam = 2 * w_a * w_ss_a - w_s_a * w_s_a
    if np.any(lam.coeff[0, 0] <= 0) or np.any(chi.coeff[0, 0] <= 0):
        raise DegenerateMetricError(
            f"degenerate metric: chi = {_first(chi.coeff[0, 0])}, Lambda = {_first(lam.coeff[0, 0])} (both must be > 0)"
        )
    out = {
        "s": s_a,
        "w": w_a,
        "w_s": w_s_a,
        "w_ss": w_ss_a,
        "chi": chi,
        "chi_s": chi_s,
        "Lambda": lam,
        "U": (2 * chi - 2 * s_a * chi_s) / lam,
        "V": -2 * chi_s / lam,
        "W": 2 / lam,
        "X": 2 * w_s_a * chi_s / (chi * lam),
    }
    if w.order.max_r >= 1:
        out["chi_r"] = chi.diff_r()
        out["W_r"] = out["W"].diff_r()
    return out


def _first(x):
    return float(np.min(x)) if np.ndim(x) else float(x)


def scalar_fields(spec: MetricSpec, r: float, s: float, check_domain: bool = True) -> MetricScalars:
    """Evaluate w, chi, Lambda, U, V, W, X, phi and their partials at (r, s)."""
    if check_domain:
        spec.require(r, s)
    _, sj, w, phi = base_jets(spec, r, s, JetOrder(1, 2))
    q = auxiliary_jets(w, sj)
    w_r = w.diff_r()
    val = lambda j: float(j.coeff[0, 0])  # noqa: E731
    return MetricScalars(
        r=float(r),
        s=float(s),
        w=val(w),
        w_s=val(w.diff_s()),
        w_ss=val(q["w_ss"]),
        w_r=val(w_r),
        w_rs=val(w_r.diff_s()),
        chi=val(q["chi"]),
        chi_s=val(q["chi_s"]),
        chi_r=val(q["chi_r"]),
        Lambda=val(q["Lambda"]),
        U=val(q["U"]),
        V=val(q["V"]),
        W=val(q["W"]),
        X=val(q["X"]),
        W_r=val(q["W_r"]),
        phi=val(phi),
        phi_s=val(phi.diff_s()),
        phi_ss=val(phi.diff_s().diff_s()),
    )


def F_value(spec: MetricSpec, pt: PointTangent) -> float:
    return pt.alpha_bar * spec.phi_scalar(pt.r, pt.s)


def fundamental_tensor(spec: MetricSpec, pt: PointTangent, check_domain: bool = True) -> np.ndarray:
    """g_ij = (1/2) d^2 F^2 / dv^i dv^j assembled from the warped block form."""
    if pt.n != spec.n:
        raise InvalidInputError(f"tangent has dimension {pt.n}, metric has n = {spec.n}")
    m = scalar_fields(spec, pt.r, pt.s, check_domain)
    g = 0.5 * np.array(hessian_2hom(m.w, m.w_s, m.w_ss, pt.s, pt.v_bar), dtype=float)
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(f"fundamental tensor not positive definite at r={pt.r}, s={pt.s}") from exc
    return g


@dataclass(frozen=True)
class DeterminantForms:
    phi_form: float
    chi_lambda_form: float
    chi_lambda_printed: float


def det_forms(spec: MetricSpec, r, s):
    """Both closed forms of det(g_ij), vectorised over s (and r).

    ``phi_form`` is phi^(n+1) phi_ss (phi - s phi_s)^(n-2);
    ``chi_lambda_form`` is chi^(n-2) Lambda / 2^n.  The normalisation
    printed alongside the latter, 1/2^(n-1), is returned as
    ``chi_lambda_printed`` for the errata report; it is off by a factor 2.
    """
    n = spec.n
    _, sj, w, phi = base_jets(spec, r, s, JetOrder(0, 2))
    phi_s = phi.diff_s()
    phi_ss = phi_s.diff_s()
    p, ps, pss, s0 = align(phi, phi_s, phi_ss, sj)
    pf = (p ** (n + 1)) * pss * ((p - s0 * ps) ** (n - 2))
    w_s = w.diff_s()
    w_ss = w_s.diff_s()
    ww, ws, wss, s0 = align(w, w_s, w_ss, sj)
    chi = 2 * ww - s0 * ws
    lam = 2 * ww * wss - ws * ws
    cl = (chi ** (n - 2)) * lam
    return DeterminantForms(pf.value, cl.value / 2.0**n, cl.value / 2.0 ** (n - 1))


def det_fundamental(spec: MetricSpec, r, s, check_domain: bool = True):
    """det(g_ij) at (r, s) in the closed phi-form; accepts arrays of s."""
    if check_domain:
        spec.require(r, s)
    forms = det_forms(spec, r, s)
    d = forms.phi_form
    if np.any(np.asarray(d) <= 0):
        raise DegenerateMetricError(f"det(g) <= 0 at r={r}")
    gap = np.abs(forms.chi_lambda_form - d) / np.abs(d)
    if np.any(gap > 1e-8):
        raise DegenerateMetricError(f"closed forms of det(g) disagree (relative gap {float(np.max(gap)):.3e})")
    return d


# ---------------------------------------------------------------------------
# validity


@dataclass
class ValidityReport:
    r_grid: np.ndarray
    s_grid: np.ndarray
    checks: dict = field(default_factory=dict)  # condition -> bool array (len(r), len(s))
    expression_ok: np.ndarray = None

    @property
    def ok(self) -> bool:
        return bool(self.expression_ok.all() and all(c.all() for c in self.checks.values()))

    def first_failure(self):
        """(r, s, condition) for the earliest failing condition, or None.

        Conditions are ranked as in CONDITIONS (expression domain first);
        within one condition the first grid point in row-major order wins.
        """
        for name in ("expression_domain",) + CONDITIONS:
            bad = ~self.expression_ok if name == "expression_domain" else ~self.checks[name]
            if bad.any():
                i, j = np.argwhere(bad)[0]
                return float(self.r_grid[i]), float(self.s_grid[j]), name
        return None

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "points": int(self.expression_ok.size),
            "failures": {name: int((~arr).sum()) for name, arr in self.checks.items()},
            "first_failure": self.first_failure(),
        }


def _scan_values(spec, r, s):
    _, sj, w, _ = base_jets(spec, r, s, JetOrder(0, 2), need_phi=False)
    w_s = w.diff_s()
    w_ss = w_s.diff_s()
    ww, ws, wss, s0 = align(w, w_s, w_ss, sj)
    chi = (2 * ww - s0 * ws).value
    chi_s = (ws - s0 * wss).value
    lam = (2 * ww * wss - ws * ws).value
    return ww.value, wss.value, chi, chi_s, lam


def validity_scan(spec: MetricSpec, r_grid=None, s_grid=None) -> ValidityReport:
    """Check w > 0, w_ss > 0, chi > 0, Lambda > 0 and positive definiteness on a grid.

    Positive definiteness is tested on the tensor assembled at the probe
    tangent (s, 1, 0, ..., 0) by a batched eigenvalue computation.
    """
    r_grid = np.linspace(*spec.r_domain, VALIDITY_GRID) if r_grid is None else np.asarray(r_grid, dtype=float)
    s_grid = np.linspace(*spec.s_domain, VALIDITY_GRID) if s_grid is None else np.asarray(s_grid, dtype=float)
    R, S = np.meshgrid(r_grid, s_grid, indexing="ij")
    rf, sf = R.ravel(), S.ravel()
    npts = rf.size
    expr_ok = np.ones(npts, dtype=bool)
    vals = np.full((5, npts), np.nan)
    try:
        vals[:] = np.array(_scan_values(spec, rf, sf))
    except (FinslerError, FloatingPointError):
        for k in range(npts):
            try:
                vals[:, k] = _scan_values(spec, rf[k], sf[k])
            except (FinslerError, FloatingPointError):
                expr_ok[k] = False
    finite = np.all(np.isfinite(vals), axis=0)
    expr_ok &= finite
    w, w_ss, chi, chi_s, lam = np.where(finite, vals, 0.0)
    checks = {
        "w_pos": w > 0,
        "w_ss_pos": w_ss > 0,
        "chi_pos": chi > 0,
        "Lambda_pos": lam > 0,
    }
    n = spec.n
    g = np.zeros((npts, n, n))
    g[:, 0, 0] = 0.5 * w_ss
    g[:, 0, 1] = g[:, 1, 0] = 0.5 * chi_s
    g[:, 1, 1] = 0.5 * (chi - sf * chi_s)
    for a in range(2, n):
        g[:, a, a] = 0.5 * chi
    checks["tensor_pd"] = np.linalg.eigvalsh(g)[:, 0] > 0
    shape = R.shape
    return ValidityReport(
        r_grid=r_grid,
        s_grid=s_grid,
        checks={k: v.reshape(shape) & expr_ok.reshape(shape) for k, v in checks.items()},
        expression_ok=expr_ok.reshape(shape),
    )


def make_metric(n: int, expr, given_as: str = "w", r_domain=(0.5, 3.0), s_domain=(-2.0, 2.0), source: str = "") -> MetricSpec:
    """Build a metric and reject it unless the 33x33 validity scan passes."""
    text = expr if isinstance(expr, str) else source
    e = expr_mod.parse(expr) if isinstance(expr, str) else expr
    spec = MetricSpec(int(n), e, given_as, tuple(map(float, r_domain)), tuple(map(float, s_domain)), text or str(e))
    report = validity_scan(spec)
    if not report.ok:
        r, s, cond = report.first_failure()
        raise ValidityError(
            f"metric {spec.source!r} is not Finslerian on the declared domain: {cond} fails at r={r}, s={s}",
            r=r,
            s=s,
            condition=cond,
        )
    return spec


__all__ = [
    "MetricSpec",
    "MetricScalars",
    "PointTangent",
    "DeterminantForms",
    "ValidityReport",
    "make_metric",
    "scalar_fields",
    "fundamental_tensor",
    "det_forms",
    "det_fundamental",
    "validity_scan",
    "base_jets",
    "auxiliary_jets",
    "gradient_2hom",
    "hessian_2hom",
    "hessian_1hom",
    "F_value",
]

"""Definition-level oracles.

Nothing here touches the closed-form spray or trace: every quantity is
rebuilt from raw evaluations of F^2(u, v) = alpha_bar^2 w(r, v1/alpha_bar).

* tensors and sprays: batched central differences, Richardson-extrapolated
  over the steps h, h/2, ..., h/2^L (Neville table in powers of 4);
* volume densities: Monte-Carlo over a bounding box of the unit F-ball;
* S-curvature: the distortion differenced along an RK4 geodesic.

Difference stencils are evaluated in ``np.longdouble``.  On x86-64 this is
80-bit extended precision, which buys the three nested difference layers
of the E oracle enough headroom; where longdouble is plain double the
oracles still run, with correspondingly larger roundoff.

Random numbers come from numpy's counter-based Philox generator.  The
sample stream is cut into fixed chunks of ``MC_CHUNK`` draws; chunk ``c``
uses ``Philox(key=seed).jumped(c)``, so the estimate depends only on the
seed and the sample count, never on how chunks are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expr as expr_mod
from .errors import DegenerateMetricError, DomainError, FinslerError, InvalidInputError, OracleError
from .metric import MetricSpec, PointTangent, det_forms, det_fundamental
from .spray import solve_linear
from .volume import normalize_kind, sigma_density, unit_ball_volume

MC_CHUNK = 1 << 18
SCAN_DIRECTIONS = 4096
SCAN_KEY = 0x5CA4
BOX_MARGIN = 1.5
MAX_VOLUME_DIM = 4
GEODESIC_STEP = 1e-3
WORK_DTYPE = np.longdouble

# coarsest step of each stencil family, as a multiple of fd_step_base
# (v-steps are further scaled by |v|)
_TENSOR_SCALE = 1000.0
_DIV_SCALE = 1000.0
_OUTER_SCALE = 3000.0


@dataclass(frozen=True)
class OracleConfig:
    fd_step_base: float = 1e-4
    richardson_levels: int = 3
    mc_samples: int = 2_000_000
    rng_seed: int = 0xF1A5

    def __post_init__(self):
        if not (1e-7 <= self.fd_step_base <= 1e-2):
            raise InvalidInputError(f"fd_step_base must lie in [1e-7, 1e-2], got {self.fd_step_base}")
        if not (0 <= self.richardson_levels <= 6):
            raise InvalidInputError(f"richardson_levels must lie in [0, 6], got {self.richardson_levels}")
        if self.mc_samples < 10_000:
            raise InvalidInputError(f"mc_samples must be >= 10000, got {self.mc_samples}")
        if not (0 <= self.rng_seed < 2**64):
            raise InvalidInputError("rng_seed must be a 64-bit unsigned integer")


DEFAULT_CONFIG = OracleConfig()


def richardson(values, power: int = 2):
    """Extrapolate estimates taken at h, h/2, h/4, ... with an even error series.

    ``values`` is a sequence (or an array whose first axis is the level).
    """
    table = [np.asarray(v) for v in values]
    for j in range(1, len(table)):
        f = 2.0 ** (power * j)
        table = [table[k + 1] + (table[k + 1] - table[k]) / (f - 1.0) for k in range(len(table) - 1)]
    return table[0]


# ---------------------------------------------------------------------------
# raw evaluations


def _f_squared(spec: MetricSpec, U, V):
    """F^2(u, v) on arrays of shape (..., n)."""
    ab2 = np.sum(V[..., 1:] ** 2, axis=-1)
    ab = np.sqrt(ab2)
    if np.any(ab == 0):
        raise OracleError("stencil reached a tangent with v_bar = 0")
    r = np.ascontiguousarray(U[..., 0])
    s = V[..., 0] / ab
    try:
        if spec.given_as == "w":
            q = expr_mod.eval_array(spec.expr, r, s, dtype=WORK_DTYPE)
        else:
            q = expr_mod.eval_array(spec.expr, r, s, dtype=WORK_DTYPE) ** 2
    except FinslerError as exc:
        raise OracleError(f"F^2 evaluation failed on a stencil point: {exc.message}") from exc
    out = ab2 * q
    if not np.all(np.isfinite(out)):
        raise OracleError("F^2 not finite on a stencil point")
    return out


def _check_pt(spec, pt, cfg: OracleConfig = DEFAULT_CONFIG):
    if pt.n != spec.n:
        raise InvalidInputError(f"tangent has dimension {pt.n}, metric has n = {spec.n}")
    pad = 10.0 * cfg.fd_step_base
    (r0, r1), (s0, s1) = spec.r_domain, spec.s_domain
    if not (r0 + pad <= pt.r <= r1 - pad and s0 + pad <= pt.s <= s1 - pad):
        raise OracleError(f"(r, s) = ({pt.r}, {pt.s}) is within {pad:g} of the domain edge")


def _levels(cfg: OracleConfig, scale: float):
    h0 = scale * cfg.fd_step_base
    steps = [h0 / 2.0**k for k in range(cfg.richardson_levels + 1)]
    if steps[-1] < 1e-12:
        raise OracleError(f"finite-difference step underflow ({steps[-1]:.3e})")
    return steps


@lru_cache(maxsize=None)
def _hessian_stencil(n: int):
    """Unit offsets O (P, n) and weights W (n, n, P) with H = W @ f(x + h O) / h^2."""
    offs = [np.zeros(n)]
    eye = np.eye(n)
    for i in range(n):
        offs += [eye[i], -eye[i]]
    for i in range(n):
        for j in range(i + 1, n):
            offs += [eye[i] + eye[j], eye[i] - eye[j], -eye[i] + eye[j], -eye[i] - eye[j]]
    O = np.array(offs)
    W = np.zeros((n, n, len(offs)))
    for i in range(n):
        W[i, i, 0] = -2.0
        W[i, i, 1 + 2 * i] = W[i, i, 2 + 2 * i] = 1.0
    p = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            w = np.array([1.0, -1.0, -1.0, 1.0]) / 4.0
            W[i, j, p:p + 4] = W[j, i, p:p + 4] = w
            p += 4
    return O, W


@lru_cache(maxsize=None)
def _spray_stencil(n: int):
    """Stencil for the three ingredients of the spray at unit steps.

    Returns (du_axis (P, n), du_along_v (P,), dv (P, n), Wh, Wm, Wg) where a
    point is ``u + h*du_axis + (h/|v|)*du_along_v*v`` and ``v + h|v|*dv``.
    """
    O, Wh_core = _hessian_stencil(n)
    eye = np.eye(n)
    du_axis, du_v, dv = [], [], []
    P_h = len(O)
    for o in O:
        du_axis.append(np.zeros(n)); du_v.append(0.0); dv.append(o)
    for l in range(n):
        for se, sv in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            du_axis.append(np.zeros(n)); du_v.append(float(se)); dv.append(sv * eye[l])
    for i in range(n):
        for sg in (1, -1):
            du_axis.append(sg * eye[i]); du_v.append(0.0); dv.append(np.zeros(n))
    P = len(dv)
    Wh = np.zeros((n, n, P))
    Wh[:, :, :P_h] = Wh_core
    Wm = np.zeros((n, P))
    Wg = np.zeros((n, P))
    p = P_h
    for l in range(n):
        Wm[l, p:p + 4] = np.array([1.0, -1.0, -1.0, 1.0]) / 4.0
        p += 4
    for i in range(n):
        Wg[i, p], Wg[i, p + 1] = 0.5, -0.5
        p += 2
    return np.array(du_axis), np.array(du_v), np.array(dv), Wh, Wm, Wg


# ---------------------------------------------------------------------------
# fundamental tensor and spray


def _fd_tensor_batch(spec, U, V, cfg):
    """(B, n, n) fundamental tensors at rows of U, V."""
    U = np.asarray(U, dtype=WORK_DTYPE)
    V = np.asarray(V, dtype=WORK_DTYPE)
    n = U.shape[-1]
    O, W = _hessian_stencil(n)
    nv = np.sqrt(np.sum(V * V, axis=-1))
    ests = []
    for h in _levels(cfg, _TENSOR_SCALE):
        hv = h * nv
        Vp = V[:, None, :] + hv[:, None, None] * O[None]
        Up = np.broadcast_to(U[:, None, :], Vp.shape)
        f = _f_squared(spec, Up, Vp)
        ests.append(0.5 * np.einsum("ijp,bp->bij", W, f) / (hv * hv)[:, None, None])
    g = richardson(ests)
    return (0.5 * (g + np.swapaxes(g, -1, -2))).astype(float)


def fd_fundamental_tensor(spec: MetricSpec, pt: PointTangent, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """g_ij = (1/2) d^2 F^2 / dv^i dv^j by Richardson-extrapolated differences."""
    _check_pt(spec, pt, cfg)
    return _fd_tensor_batch(spec, pt.u[None], pt.vector[None], cfg)[0]


def fd_spray_batch(spec: MetricSpec, U, V, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Spray G(u, v) for each row of U, V (shape (B, n)), from F^2 alone.

    ``G = (1/2) H^{-1} (M - grad_u F^2)`` with ``H`` the v-Hessian of F^2 and
    ``M_l = sum_m v^m d^2 F^2 / du^m dv^l``; M is taken as the mixed
    derivative of ``F^2(u + e v, v + d e_l)`` in (e, d).
    """
    U = np.asarray(U, dtype=WORK_DTYPE)
    V = np.asarray(V, dtype=WORK_DTYPE)
    n = U.shape[-1]
    du_axis, du_v, dv, Wh, Wm, Wg = _spray_stencil(n)
    nv = np.sqrt(np.sum(V * V, axis=-1))
    vhat = V / nv[:, None]
    H_l, M_l, g_l = [], [], []
    for h in _levels(cfg, _TENSOR_SCALE):
        hv = h * nv
        Up = U[:, None, :] + h * du_axis[None] + h * du_v[None, :, None] * vhat[:, None, :]
        Vp = V[:, None, :] + hv[:, None, None] * dv[None]
        f = _f_squared(spec, Up, Vp)
        H_l.append(np.einsum("ijp,bp->bij", Wh, f) / (hv * hv)[:, None, None])
        # d/de with e = h/|v| (u moves by h along v_hat) and d = h|v|
        M_l.append(np.einsum("lp,bp->bl", Wm, f) / (h * h))
        g_l.append(np.einsum("ip,bp->bi", Wg, f) / h)
    H = richardson(H_l)
    M = richardson(M_l)
    grad = richardson(g_l)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    eig = np.linalg.eigvalsh(H.astype(float))
    if not np.all(np.isfinite(eig)) or np.any(eig[:, 0] <= 1e-12 * np.abs(eig[:, -1])):
        raise OracleError("finite-difference fundamental tensor is singular or indefinite")
    rhs = M - grad
    x = solve_linear([[H[:, i, j] for j in range(n)] for i in range(n)], [rhs[:, i] for i in range(n)])
    return 0.5 * np.stack(x, axis=-1)


def fd_spray(spec: MetricSpec, pt: PointTangent, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Spray coefficients G^i at (u, v) from differences of F^2."""
    _check_pt(spec, pt, cfg)
    return fd_spray_batch(spec, pt.u[None], pt.vector[None], cfg)[0].astype(float)


def fd_spray_divergence(spec: MetricSpec, pt: PointTangent, cfg: OracleConfig = DEFAULT_CONFIG) -> float:
    """sum_m dG^m/dv^m by central differences of ``fd_spray``."""
    _check_pt(spec, pt, cfg)
    n = spec.n
    nv = float(np.linalg.norm(pt.vector))
    steps = [h * nv for h in _levels(cfg, _DIV_SCALE)]
    eye = np.eye(n)
    v = pt.vector.astype(WORK_DTYPE)
    disp = np.array(steps)[:, None, None, None] * np.array([1.0, -1.0])[None, None, :, None] * eye[None, :, None, :]
    flat = (v + disp).reshape(-1, n)
    G = fd_spray_batch(spec, np.broadcast_to(pt.u.astype(WORK_DTYPE), flat.shape), flat, cfg)
    G = G.reshape(len(steps), n, 2, n)
    idx = np.arange(n)
    div = (G[:, idx, 0, idx] - G[:, idx, 1, idx]).sum(axis=-1) / (2.0 * np.array(steps))
    return float(richardson(div))


def fd_e_tensor(spec: MetricSpec, pt: PointTangent, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """E_ij = (1/2) v-Hessian of the divergence of ``fd_spray``.

    Three nested difference layers (spray, divergence, Hessian) are all
    gathered into a single batched call of ``fd_spray_batch``.
    """
    _check_pt(spec, pt, cfg)
    n = spec.n
    u, v = pt.u.astype(WORK_DTYPE), pt.vector.astype(WORK_DTYPE)
    nv = float(np.linalg.norm(pt.vector))
    O, W = _hessian_stencil(n)
    eye = np.eye(n)
    outer = [h * nv for h in _levels(cfg, _OUTER_SCALE)]
    inner = [h * nv for h in _levels(cfg, _DIV_SCALE)]
    L_o, P, L_i = len(outer), len(O), len(inner)
    # points indexed (outer level, hessian offset, inner level, axis m, sign)
    base = v[None, :] + np.array(outer)[:, None, None] * O[None]  # (L_o, P, n)
    signs = np.array([1.0, -1.0])
    disp = np.array(inner)[:, None, None, None] * signs[None, None, :, None] * eye[None, :, None, :]  # (L_i, n, 2, n)
    Vp = base[:, :, None, None, None, :] + disp[None, None]
    flat = Vp.reshape(-1, n)
    G = fd_spray_batch(spec, np.broadcast_to(u, flat.shape), flat, cfg)
    G = G.reshape(L_o, P, L_i, n, 2, n)
    idx = np.arange(n)
    dG = G[:, :, :, idx, 0, idx] - G[:, :, :, idx, 1, idx]  # (L_o, P, L_i, n)
    div = dG.sum(axis=-1) / (2.0 * np.array(inner))[None, None, :]
    D = richardson(np.moveaxis(div, 2, 0))  # (L_o, P)
    ests = [W @ D[k] / (outer[k] ** 2) for k in range(L_o)]
    E = 0.5 * richardson(ests)
    return (0.5 * (E + E.T)).astype(float)


# ---------------------------------------------------------------------------
# volume


def _scan_directions(n: int):
    rng = np.random.Generator(np.random.Philox(key=SCAN_KEY))
    d = rng.standard_normal((SCAN_DIRECTIONS, n))
    d = np.vstack([d, np.eye(n), -np.eye(n)])
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    # keep v_bar away from zero so s stays finite
    return d[np.linalg.norm(d[:, 1:], axis=1) > 1e-9]


def _unit_ball_box(spec: MetricSpec, r: float):
    d = _scan_directions(spec.n)
    ab = np.linalg.norm(d[:, 1:], axis=1)
    try:
        F = ab * spec.phi_array(np.full(len(d), r), d[:, 0] / ab)
    except FinslerError as exc:
        raise DomainError(f"boundary scan of the unit ball failed at r={r}: {exc.message}") from exc
    if not np.all(np.isfinite(F)) or np.any(F <= 0):
        raise DomainError(f"unit F-ball at r={r} is unbounded (F <= 0 in some direction)")
    pts = d / F[:, None]
    lo = BOX_MARGIN * np.minimum(pts.min(axis=0), 0.0)
    hi = BOX_MARGIN * np.maximum(pts.max(axis=0), 0.0)
    return lo, hi


def _chunk_rng(seed: int, chunk: int):
    bg = np.random.Philox(key=seed)
    return np.random.Generator(bg.jumped(chunk) if chunk else bg)


def _mc_sums(spec: MetricSpec, r: float, kind: str, lo, hi, samples: int, seed: int):
    n = spec.n
    count = 0
    weight = []
    chunks = -(-samples // MC_CHUNK)
    for c in range(chunks):
        m = min(MC_CHUNK, samples - c * MC_CHUNK)
        x = lo + (hi - lo) * _chunk_rng(seed, c).random((m, n))
        ab = np.linalg.norm(x[:, 1:], axis=1)
        x, ab = x[ab > 0], ab[ab > 0]
        s = x[:, 0] / ab
        try:
            inside = ab * spec.phi_array(np.full(len(s), r), s) < 1.0
        except FinslerError as exc:
            raise DomainError(f"F undefined inside the sampling box at r={r}: {exc.message}") from exc
        count += int(np.count_nonzero(inside))
        if kind == "HT" and np.any(inside):
            si = s[inside]
            weight.append(math.fsum(det_forms(spec, np.full(len(si), r), si).phi_form))
    return count, math.fsum(weight)


def direct_volume_density(spec: MetricSpec, r: float, kind: str = "BH", cfg: OracleConfig = DEFAULT_CONFIG) -> float:
    """Volume density at r by Monte-Carlo over the unit F-ball.

    BH: Vol(B^n) / Vol{F < 1}.  HT: (1/Vol(B^n)) * integral of det g over {F < 1}.
    """
    kind = normalize_kind(kind)
    if spec.n > MAX_VOLUME_DIM:
        raise InvalidInputError(f"direct volume integration is limited to n <= {MAX_VOLUME_DIM}")
    r = float(r)
    lo, hi = _unit_ball_box(spec, r)
    box = float(np.prod(hi - lo))
    count, wsum = _mc_sums(spec, r, kind, lo, hi, cfg.mc_samples, cfg.rng_seed)
    if count == 0:
        raise OracleError(f"no Monte-Carlo sample fell inside the unit ball at r={r}")
    omega = unit_ball_volume(spec.n)
    if kind == "BH":
        return omega / (box * count / cfg.mc_samples)
    return box * wsum / cfg.mc_samples / omega


# ---------------------------------------------------------------------------
# distortion and geodesic S-curvature


def distortion(spec: MetricSpec, pt: PointTangent, kind: str = "BH") -> float:
    """tau = log(sqrt(det g) / sigma)."""
    if pt.n != spec.n:
        raise InvalidInputError(f"tangent has dimension {pt.n}, metric has n = {spec.n}")
    spec.require(pt.r, pt.s)
    d = float(det_fundamental(spec, pt.r, pt.s, check_domain=False))
    return 0.5 * math.log(d) - math.log(sigma_density(spec, pt.r, normalize_kind(kind)))


def _rk4_step(spec, U, V, h, cfg):
    def acc(u, v):
        return -2.0 * fd_spray_batch(spec, u, v, cfg)

    hh = h[:, None]
    k1u, k1v = V, acc(U, V)
    k2u, k2v = V + 0.5 * hh * k1v, acc(U + 0.5 * hh * k1u, V + 0.5 * hh * k1v)
    k3u, k3v = V + 0.5 * hh * k2v, acc(U + 0.5 * hh * k2u, V + 0.5 * hh * k2v)
    k4u, k4v = V + hh * k3v, acc(U + hh * k3u, V + hh * k3v)
    return (U + hh / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u),
            V + hh / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


def geodesic_s_curvature(spec: MetricSpec, pt: PointTangent, kind: str = "BH",
                         cfg: OracleConfig = DEFAULT_CONFIG, h: float = GEODESIC_STEP) -> float:
    """S = d/dt tau(gamma(t), gamma'(t)) at t = 0.

    One fixed RK4 step to each of t = +-h and t = +-h/2; the two central
    differences are combined by one Richardson step.
    """
    _check_pt(spec, pt, cfg)
    kind = normalize_kind(kind)
    spec.require(pt.r, pt.s)
    steps = np.array([h, -h, h / 2, -h / 2])
    U = np.tile(pt.u, (4, 1))
    V = np.tile(pt.vector, (4, 1))
    U1, V1 = _rk4_step(spec, U, V, steps, cfg)
    taus = []
    for u, v in zip(U1.astype(float), V1.astype(float)):
        try:
            end = PointTangent.from_vector(u[0], v, tuple(u[1:]))
        except InvalidInputError as exc:
            raise OracleError(f"geodesic left the tangent domain: {exc.message}") from exc
        if not spec.contains(end.r, end.s):
            raise OracleError(f"geodesic left the metric domain at r={end.r:.6g}, s={end.s:.6g}")
        try:
            taus.append(distortion(spec, end, kind))
        except (DegenerateMetricError, DomainError) as exc:
            raise OracleError(f"distortion undefined along the geodesic: {exc.message}") from exc
    coarse = (taus[0] - taus[1]) / (2.0 * h)
    fine = (taus[2] - taus[3]) / h
    return float(richardson([coarse, fine]))

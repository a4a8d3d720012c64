"""Command-line front end.

    finslerwarp inspect        metric scalars over an (r, s) grid
    finslerwarp curvature      E, S and the F-Hessian at points
    finslerwarp volume         k, sigma and both g conventions per r
    finslerwarp check          isotropy fits and the S/E equivalence report
    finslerwarp oracle-compare closed forms against the independent oracles
    finslerwarp sweep          one scalar over a grid (CSV by default)

Exit codes: 0 success, 1 input or evaluation error, 2 forward-implication
violation in ``check``.  Errors are written to stderr as JSON.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import curvature, equivalence, metric, spray, verify, volume
from ._kernels import BACKEND
from .catalog import DEFAULT_R_DOMAIN, DEFAULT_S_DOMAIN, parse_catalog
from .errors import FinslerError, ForwardImplicationViolation, InvalidInputError
from .metric import PointTangent, make_metric

SCHEMA_VERSION = "1"
DEFAULT_SEED = 0xF1A5
DEFAULT_R_COUNT = 9
DEFAULT_S_COUNT = 17
SUBCOMMANDS = ("inspect", "curvature", "volume", "check", "oracle-compare", "sweep")
METRIC_FIELDS = tuple(metric.MetricScalars.__dataclass_fields__)
SWEEP_QUANTITIES = METRIC_FIELDS[2:] + spray.SCALAR_FIELDS + ("T", "S", "det_g", "tau")
VALUE_OPTIONS = ("--r", "--s", "--r-range", "--s-range", "--r-domain", "--s-domain", "--v", "--tol")


class UsageError(InvalidInputError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument handling


def _join_negative_values(argv):
    """Glue ``--s-range -1:1:5`` into ``--s-range=-1:1:5`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok in VALUE_OPTIONS and nxt[:1] == "-" and nxt[1:2] in set("0123456789."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--w", metavar="EXPR", help="w(r, s) = phi^2")
    src.add_argument("--phi", metavar="EXPR", help="phi(r, s)")
    src.add_argument("--catalog", metavar="NAME[,k=v]", help="euclid | riemann_warp,f=EXPR | randers_warp,f=EXPR,eps=E")
    common.add_argument("--n", type=int, default=3, help="dimension (default 3)")
    common.add_argument("--r", help="comma-separated r values")
    common.add_argument("--s", help="comma-separated s values")
    common.add_argument("--r-range", metavar="A:B:COUNT")
    common.add_argument("--s-range", metavar="A:B:COUNT")
    common.add_argument("--r-domain", metavar="A:B", help=f"declared r domain (default {DEFAULT_R_DOMAIN[0]}:{DEFAULT_R_DOMAIN[1]})")
    common.add_argument("--s-domain", metavar="A:B", help=f"declared s domain (default {DEFAULT_S_DOMAIN[0]}:{DEFAULT_S_DOMAIN[1]})")
    common.add_argument("--volume", choices=("bh", "ht"), default="bh")
    common.add_argument("--mode", choices=("definitional", "printed"), default="definitional")
    common.add_argument("--tol", type=float, default=equivalence.DEFAULT_TOL)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--mc-samples", type=int, default=verify.DEFAULT_CONFIG.mc_samples)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", metavar="PATH")

    parser = _Parser(prog="finslerwarp", description="Warped-product Finsler metric toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("curvature", "oracle-compare"):
            p.add_argument("--v", metavar="V1,...,Vn", help="tangent vector (overrides --s)")
        if name == "sweep":
            p.add_argument("--quantity", default="Phi", choices=SWEEP_QUANTITIES)
    return parser


def _floats(text, what):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from exc
    if not vals or not all(map(math.isfinite, vals)):
        raise UsageError(f"{what}: expected finite numbers, got {text!r}")
    return vals


def _range(text, what):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what}: expected A:B:COUNT, got {text!r}")
    a, b = _floats(parts[0], what)[0], _floats(parts[1], what)[0]
    try:
        count = int(parts[2])
    except ValueError as exc:
        raise UsageError(f"{what}: COUNT must be an integer, got {parts[2]!r}") from exc
    if count < 2 or not a < b:
        raise UsageError(f"{what}: need A < B and COUNT >= 2, got {text!r}")
    return np.linspace(a, b, count).tolist()


def _domain(text, default, what):
    if text is None:
        return default
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"{what}: expected A:B, got {text!r}")
    lo, hi = _floats(parts[0], what)[0], _floats(parts[1], what)[0]
    if not lo < hi:
        raise UsageError(f"{what}: need A < B, got {text!r}")
    return (lo, hi)


def _grid(values, rng, domain, count, what, required=False):
    if values is not None and rng is not None:
        raise UsageError(f"give either --{what} or --{what}-range, not both")
    if values is not None:
        return _floats(values, f"--{what}")
    if rng is not None:
        return _range(rng, f"--{what}-range")
    if required:
        raise UsageError(f"--{what} or --{what}-range is required for this subcommand")
    return np.linspace(domain[0], domain[1], count).tolist()


def _metric(args):
    r_dom = _domain(args.r_domain, DEFAULT_R_DOMAIN, "--r-domain")
    s_dom = _domain(args.s_domain, DEFAULT_S_DOMAIN, "--s-domain")
    if args.catalog is not None:
        entry = parse_catalog(args.catalog)
        return make_metric(args.n, entry.expr, entry.given_as, r_dom, s_dom, source=entry.name)
    if args.w is not None:
        return make_metric(args.n, args.w, "w", r_dom, s_dom)
    return make_metric(args.n, args.phi, "phi", r_dom, s_dom)


def _workers() -> int:
    raw = os.environ.get("FINSLERWARP_THREADS", "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError as exc:
        raise UsageError(f"FINSLERWARP_THREADS must be a non-negative integer, got {raw!r}") from exc
    if k < 0:
        raise UsageError(f"FINSLERWARP_THREADS must be a non-negative integer, got {raw!r}")
    return k or min(8, os.cpu_count() or 1)


def _map(fn, items):
    """Ordered map; the worker count never changes the result order."""
    items = list(items)
    k = _workers()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands


class Context:
    def __init__(self, args):
        self.args = args
        self.spec = _metric(args)
        self.kind = args.volume.upper()
        self.mode = args.mode
        required = args.subcommand in ("curvature", "oracle-compare")
        self.r = _grid(args.r, args.r_range, self.spec.r_domain, DEFAULT_R_COUNT, "r", required)
        self.v = _floats(args.v, "--v") if getattr(args, "v", None) else None
        if self.v is not None:
            if len(self.v) != self.spec.n:
                raise UsageError(f"--v needs {self.spec.n} components, got {len(self.v)}")
            if args.s is not None or args.s_range is not None:
                raise UsageError("--v replaces --s; give only one")
            self.s = [PointTangent.from_vector(self.r[0], self.v).s]
        else:
            self.s = _grid(args.s, args.s_range, self.spec.s_domain, DEFAULT_S_COUNT, "s", required)
        self.spec.require(self.r, self.s)
        self.cfg = verify.OracleConfig(mc_samples=args.mc_samples, rng_seed=args.seed)

    def points(self):
        return [(r, s) for r in self.r for s in self.s]

    def tangent(self, r, s):
        if self.v is not None:
            return PointTangent.from_vector(r, self.v)
        return PointTangent.reduced(r, s, self.spec.n)

    def request(self):
        a = self.args
        return {
            "subcommand": a.subcommand,
            "metric": {
                "source": self.spec.source,
                "given_as": self.spec.given_as,
                "expression": str(self.spec.expr),
                "n": self.spec.n,
                "r_domain": list(self.spec.r_domain),
                "s_domain": list(self.spec.s_domain),
            },
            "r": list(self.r),
            "s": list(self.s),
            "v": self.v,
            "volume": a.volume,
            "mode": a.mode,
            "tol": a.tol,
            "seed": a.seed,
            "mc_samples": a.mc_samples,
            "quantity": getattr(a, "quantity", None),
        }

    def provenance(self):
        return {
            "mode": self.mode,
            "seed": self.args.seed,
            "tolerances": {
                "equivalence_tol": self.args.tol,
                "quadrature_rel_tol": volume.REL_TOL,
                "fd_step_base": self.cfg.fd_step_base,
                "richardson_levels": self.cfg.richardson_levels,
                "mc_samples": self.cfg.mc_samples,
            },
            "kernel_backend": BACKEND,
        }


def cmd_inspect(ctx: Context):
    def one(p):
        m = metric.scalar_fields(ctx.spec, *p)
        return {k: getattr(m, k) for k in METRIC_FIELDS}

    return {"validity": metric.validity_scan(ctx.spec).summary(), "rows": _map(one, ctx.points())}


def cmd_curvature(ctx: Context):
    spec, mode = ctx.spec, ctx.mode

    def one(p):
        pt = ctx.tangent(*p)
        return {
            "r": pt.r, "s": pt.s, "v": pt.vector.tolist(),
            "S": curvature.s_curvature(spec, pt, ctx.kind, mode, mode),
            "E": curvature.e_tensor(spec, pt, mode, mode).tolist(),
            "F_hessian": curvature.f_hessian(spec, pt).tolist(),
        }

    return {"volume_kind": ctx.kind, "rows": _map(one, ctx.points())}


def cmd_volume(ctx: Context):
    def one(r):
        row = {"r": r}
        for kind in volume.KINDS:
            vf = volume.volume_factors(ctx.spec, r, kind)
            k = kind.lower()
            row.update({f"k_{k}": vf.k_value, f"sigma_{k}": vf.sigma, f"g_{k}": vf.g_value,
                        f"g_{k}_paper": vf.g_paper, f"panels_{k}": vf.panels})
        return row

    return {"g_conventions": {"g": "-d/dr log sigma", "g_paper": "-r k'(r)/k(r)"}, "rows": _map(one, ctx.r)}


def cmd_check(ctx: Context):
    rep = equivalence.classify(ctx.spec, ctx.kind, ctx.r, ctx.s, ctx.mode, ctx.args.tol)
    out = rep.as_dict()
    out["rows"] = [
        {
            "r": rec.r, "c_S": rec.s_fit.c_fit, "max_residual_S": rec.s_fit.max_residual,
            "c_E": rec.e_fit.c_fit, "kappa_E": rec.e_fit.kappa_fit, "max_residual_E": rec.e_fit.max_residual,
            "g": rec.g, "a_fit": rec.a_fit, "identity_max": rec.identity_max,
        }
        for rec in rep.records
    ]
    return out


def _gap(a, b):
    if a is None or b is None:
        return None, None
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    g = float(np.max(np.abs(a - b)))
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return g, g / scale


def _row(r, s, quantity, definitional, printed, oracle):
    abs_gap, rel_gap = _gap(definitional, oracle)
    return {
        "r": r, "s": s, "quantity": quantity,
        "definitional": definitional, "printed": printed, "oracle": oracle,
        "abs_gap": abs_gap, "rel_gap": rel_gap,
    }


def cmd_oracle_compare(ctx: Context):
    spec, kind, cfg, n = ctx.spec, ctx.kind, ctx.cfg, ctx.spec.n

    def one(p):
        pt = ctx.tangent(*p)
        r, s, ab = pt.r, pt.s, pt.alpha_bar
        vb = np.array(pt.v_bar)
        rows = []
        g_fd = verify.fd_fundamental_tensor(spec, pt, cfg)
        rows.append(_row(r, s, "g", metric.fundamental_tensor(spec, pt).tolist(), None, g_fd.tolist()))
        forms = metric.det_forms(spec, r, s)
        rows.append(_row(r, s, "det_g", float(metric.det_fundamental(spec, r, s)),
                         float(forms.chi_lambda_printed), float(np.linalg.det(g_fd))))
        sd = spray.spray_scalars(spec, r, s, "definitional")
        sp = spray.spray_scalars(spec, r, s, "printed")
        G = verify.fd_spray(spec, pt, cfg)
        rows.append(_row(r, s, "Phi", sd.Phi, sp.Phi, float(G[0] / ab**2)))
        rows.append(_row(r, s, "Psi", sd.Psi, sp.Psi, float(G[1:] @ vb / ab**3)))
        rows.append(_row(r, s, "T", curvature.trace_density(spec, r, s, "definitional").T,
                         curvature.trace_density(spec, r, s, "printed", "printed").T,
                         verify.fd_spray_divergence(spec, pt, cfg) / ab))
        rows.append(_row(r, s, "E", curvature.e_tensor(spec, pt).tolist(),
                         curvature.e_tensor(spec, pt, "printed", "printed").tolist(),
                         verify.fd_e_tensor(spec, pt, cfg).tolist()))
        rows.append(_row(r, s, "S", curvature.s_curvature(spec, pt, kind),
                         curvature.s_curvature(spec, pt, kind, "printed", "printed"),
                         verify.geodesic_s_curvature(spec, pt, kind, cfg)))
        return rows

    def sigma(r):
        mc = verify.direct_volume_density(spec, r, kind, cfg) if n <= verify.MAX_VOLUME_DIM else None
        return _row(r, None, "sigma", volume.sigma_density(spec, r, kind), None, mc)

    rows = [row for block in _map(one, ctx.points()) for row in block]
    rows += _map(sigma, ctx.r)
    errata = []
    for row in rows:
        if row["printed"] is not None:
            gap, _ = _gap(row["printed"], row["definitional"])
            errata.append({"r": row["r"], "s": row["s"], "quantity": row["quantity"],
                           "printed": row["printed"], "definitional": row["definitional"], "gap": gap})
    return {"volume_kind": kind, "rows": rows, "errata": errata}


def cmd_sweep(ctx: Context):
    spec, q, mode = ctx.spec, ctx.args.quantity, ctx.mode

    def one(p):
        r, s = p
        if q in METRIC_FIELDS:
            val = getattr(metric.scalar_fields(spec, r, s), q)
        elif q in spray.SCALAR_FIELDS:
            val = getattr(spray.spray_scalars(spec, r, s, mode), q)
        elif q == "T":
            val = curvature.trace_density(spec, r, s, mode, mode).T
        elif q == "S":
            val = curvature.s_curvature(spec, ctx.tangent(r, s), ctx.kind, mode, mode)
        elif q == "det_g":
            val = float(metric.det_fundamental(spec, r, s))
        else:
            val = verify.distortion(spec, ctx.tangent(r, s), ctx.kind)
        return {"r": r, "s": s, "quantity": q, "value": val}

    return {"quantity": q, "rows": _map(one, ctx.points())}


COMMANDS = {
    "inspect": cmd_inspect,
    "curvature": cmd_curvature,
    "volume": cmd_volume,
    "check": cmd_check,
    "oracle-compare": cmd_oracle_compare,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# output


def _plain(x):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise FinslerError(f"non-finite value in output: {x}")
        return x
    return x


def render(document: dict, fmt: str) -> bytes:
    if fmt == "json":
        return (json.dumps(document, ensure_ascii=False, allow_nan=False, indent=2) + "\n").encode("utf-8")
    rows = document["results"].get("rows", [])
    header = []
    for row in rows:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue().encode("utf-8")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


class OutputError(FinslerError):
    code = "io_error"


def emit(document: dict, fmt: str = "json", path: str | None = None):
    data = render(document, fmt)
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}", path=path) from exc


def run(args) -> tuple[dict, int]:
    _workers()  # reject a malformed FINSLERWARP_THREADS even when nothing is parallel
    ctx = Context(args)
    results = COMMANDS[args.subcommand](ctx)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "request": ctx.request(),
        "results": results,
        "provenance": ctx.provenance(),
    }
    return _plain(doc), 0


def _report(exc: FinslerError):
    payload = {"schema_version": SCHEMA_VERSION, "error": _plain(exc.to_dict())}
    sys.stderr.write(json.dumps(payload, allow_nan=False, default=str) + "\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        fmt = args.format or ("csv" if args.subcommand == "sweep" else "json")
        doc, code = run(args)
        emit(doc, fmt, args.out)
        return code
    except ForwardImplicationViolation as exc:
        _report(exc)
        return 2
    except FinslerError as exc:
        _report(exc)
        return 1
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        _report(FinslerError(f"{type(exc).__name__}: {exc}"))
        return 1


if __name__ == "__main__":
    sys.exit(main())

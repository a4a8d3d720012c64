"""Named metric families.

``euclid``                      w = 1 + s^2
``riemann_warp,f=EXPR``         w = s^2 + f(r)^2
``randers_warp,f=EXPR,eps=E``   phi = sqrt(s^2 + f(r)^2) + eps s

Parameters go through the expression grammar; ``f`` may only mention r and
``eps`` must be a constant expression.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import expr as E
from .errors import InvalidInputError
from .metric import MetricSpec, make_metric

DEFAULT_R_DOMAIN = (0.5, 3.0)
DEFAULT_S_DOMAIN = (-2.0, 2.0)
FAMILIES = ("euclid", "riemann_warp", "randers_warp")
DEFAULT_PARAMS = {"euclid": {}, "riemann_warp": {"f": "r"}, "randers_warp": {"f": "r", "eps": "0.5"}}


@dataclass(frozen=True)
class CatalogEntry:
    family: str
    params: tuple  # sorted (key, text) pairs, as given or defaulted
    expr: E.Expr
    given_as: str

    @property
    def name(self) -> str:
        return ",".join([self.family] + [f"{k}={v}" for k, v in self.params])


def _r_only(text: str, key: str) -> E.Expr:
    e = E.parse(text)
    extra = E.variables(e) - {"r"}
    if extra:
        raise InvalidInputError(f"catalog parameter {key}={text!r} may only depend on r, found {sorted(extra)}")
    return e


def _constant(text: str, key: str) -> float:
    e = E.parse(text)
    if E.variables(e):
        raise InvalidInputError(f"catalog parameter {key}={text!r} must be a constant")
    return E.eval_scalar(e, 0.0, 0.0)


def parse_catalog(text: str) -> CatalogEntry:
    """Parse ``NAME[,key=value...]`` into an expression tree."""
    parts = [p.strip() for p in str(text).split(",")]
    family = parts[0]
    if family not in FAMILIES:
        raise InvalidInputError(f"unknown catalog family {family!r}; expected one of {FAMILIES}")
    params = dict(DEFAULT_PARAMS[family])
    for item in parts[1:]:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in params:
            raise InvalidInputError(f"bad catalog parameter {item!r} for {family}; allowed: {sorted(params)}")
        params[key] = value.strip()
    s = E.Var("s")
    if family == "euclid":
        return CatalogEntry(family, (), E.BinOp("+", E.Num(1.0), E.Pow(s, 2.0)), "w")
    f = _r_only(params["f"], "f")
    radicand = E.BinOp("+", E.Pow(s, 2.0), E.Pow(f, 2.0))
    if family == "riemann_warp":
        return CatalogEntry(family, (("f", params["f"]),), radicand, "w")
    eps = _constant(params["eps"], "eps")
    phi = E.BinOp("+", E.Call("sqrt", radicand), E.BinOp("*", E.Num(eps), s))
    return CatalogEntry(family, (("eps", params["eps"]), ("f", params["f"])), phi, "phi")


def catalog_metric(text: str, n: int = 3, r_domain=DEFAULT_R_DOMAIN, s_domain=DEFAULT_S_DOMAIN) -> MetricSpec:
    entry = parse_catalog(text)
    return make_metric(n, entry.expr, entry.given_as, r_domain, s_domain, source=entry.name)


# the families used by the test and acceptance suites
STANDARD = (
    "euclid",
    "riemann_warp,f=r",
    "riemann_warp,f=1+r^2",
    "riemann_warp,f=exp(r)",
    "randers_warp,f=r,eps=0.5",
    "randers_warp,f=1,eps=0.5",
    "randers_warp,f=exp(r),eps=0.5",
)


def standard_catalog(n: int = 3):
    return [catalog_metric(name, n) for name in STANDARD]

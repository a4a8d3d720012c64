"""Truncated bivariate Taylor series ("jets") in the variables (r, s).

A :class:`Jet` stores ``coeff[i][j] = d^(i+j) f / dr^i ds^j / (i! j!)`` at a
base point.  Arithmetic on jets is exact for every carried order, so the
partial derivatives the curvature formulas need come out without any
finite-difference error.

A jet may be *batched*: ``base_r``/``base_s`` are 1-D arrays of length N and
``coeff`` gains a trailing axis of length N.  All operations then act
column by column; this is what the quadrature and Monte-Carlo paths use.

>>> r, s = seed_pair(2.0, 1.0, JetOrder(1, 3))
>>> f = r * s ** 3
>>> derivative(f, 1, 3)
6.0
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from . import _kernels
from .errors import ContractError, DomainError, InvalidInputError, SingularDivisionError

MAX_R_CAP = 4
MAX_S_CAP = 8


@dataclass(frozen=True)
class JetOrder:
    max_r: int = 2
    max_s: int = 6

    def __post_init__(self):
        for name, val, cap in (("max_r", self.max_r, MAX_R_CAP), ("max_s", self.max_s, MAX_S_CAP)):
            if not isinstance(val, (int, np.integer)) or not 0 <= val <= cap:
                raise ContractError(f"JetOrder.{name} must be an integer in [0, {cap}], got {val!r}")

    @property
    def shape(self):
        return (self.max_r + 1, self.max_s + 1)

    def meet(self, other: "JetOrder") -> "JetOrder":
        return JetOrder(min(self.max_r, other.max_r), min(self.max_s, other.max_s))


DEFAULT_ORDER = JetOrder(2, 6)


def _as_base(x):
    if isinstance(x, np.ndarray):
        if x.ndim != 1:
            raise ContractError("batched base points must be 1-D arrays")
        return np.ascontiguousarray(x, dtype=float)
    return float(x)


class Jet:
    """Immutable truncated Taylor expansion of a scalar field of (r, s)."""

    __slots__ = ("order", "base_r", "base_s", "coeff")
    __array_ufunc__ = None  # make numpy scalars defer to our reflected operators

    def __init__(self, order: JetOrder, base_r, base_s, coeff):
        coeff = np.asarray(coeff, dtype=float)
        batched = isinstance(base_r, np.ndarray)
        expected = order.shape + ((len(base_r),) if batched else ())
        if coeff.shape != expected:
            raise ContractError(f"coefficient table has shape {coeff.shape}, expected {expected}")
        coeff.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "base_r", base_r)
        object.__setattr__(self, "base_s", base_s)
        object.__setattr__(self, "coeff", coeff)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # -- structure ---------------------------------------------------------
    @property
    def batched(self) -> bool:
        return self.coeff.ndim == 3

    @property
    def value(self):
        return self.coeff[0, 0].copy() if self.batched else float(self.coeff[0, 0])

    def _table3(self):
        c = self.coeff
        return c if c.ndim == 3 else c[:, :, None]

    def _new(self, table3, order=None):
        order = order or self.order
        table = table3 if self.batched else table3[:, :, 0]
        return Jet(order, self.base_r, self.base_s, table)

    def _check_compatible(self, other: "Jet"):
        if other.order != self.order:
            raise ContractError(f"jet orders differ: {self.order} vs {other.order}")
        if self.batched != other.batched:
            raise ContractError("cannot mix batched and scalar jets")
        if self.batched:
            same = (self.base_r is other.base_r or np.array_equal(self.base_r, other.base_r)) and (
                self.base_s is other.base_s or np.array_equal(self.base_s, other.base_s)
            )
        else:
            same = self.base_r == other.base_r and self.base_s == other.base_s
        if not same:
            raise ContractError("jets are expanded about different base points")

    def truncate(self, order: JetOrder) -> "Jet":
        if order.max_r > self.order.max_r or order.max_s > self.order.max_s:
            raise ContractError(f"cannot raise jet order {self.order} to {order}")
        c = self.coeff[: order.max_r + 1, : order.max_s + 1]
        return Jet(order, self.base_r, self.base_s, np.array(c))

    def diff_s(self) -> "Jet":
        """Jet of the s-partial; carried s-order drops by one."""
        if self.order.max_s == 0:
            raise ContractError("no s-order left to differentiate")
        j = np.arange(1, self.order.max_s + 1, dtype=float)
        if self.batched:
            j = j[:, None]
        c = self.coeff[:, 1:] * j
        return Jet(JetOrder(self.order.max_r, self.order.max_s - 1), self.base_r, self.base_s, c)

    def diff_r(self) -> "Jet":
        """Jet of the r-partial; carried r-order drops by one."""
        if self.order.max_r == 0:
            raise ContractError("no r-order left to differentiate")
        i = np.arange(1, self.order.max_r + 1, dtype=float)
        i = i[:, None, None] if self.batched else i[:, None]
        c = self.coeff[1:] * i
        return Jet(JetOrder(self.order.max_r - 1, self.order.max_s), self.base_r, self.base_s, c)

    def variable_like(self, role: str) -> "Jet":
        """The seed jet of r or s sharing this jet's base point and order."""
        c = np.zeros(self.coeff.shape)
        if role == "var_r":
            c[0, 0] = self.base_r
            if self.order.max_r >= 1:
                c[1, 0] = 1.0
        elif role == "var_s":
            c[0, 0] = self.base_s
            if self.order.max_s >= 1:
                c[0, 1] = 1.0
        else:
            raise InvalidInputError(f"unknown seed role {role!r}")
        return Jet(self.order, self.base_r, self.base_s, c)

    def constant_like(self, value) -> "Jet":
        c = np.zeros(self.coeff.shape)
        c[0, 0] = value
        return Jet(self.order, self.base_r, self.base_s, c)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return other
        if isinstance(other, (Real, np.ndarray)):
            return self.constant_like(other)
        return NotImplemented

    def __neg__(self):
        return Jet(self.order, self.base_r, self.base_s, -self.coeff)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, (Real, np.ndarray)):
            c = np.array(self.coeff)
            c[0, 0] = c[0, 0] + other
            return Jet(self.order, self.base_r, self.base_s, c)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet(self.order, self.base_r, self.base_s, self.coeff + o.coeff)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Real, np.ndarray)):
            return Jet(self.order, self.base_r, self.base_s, self.coeff * other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._new(_kernels.mul(self._table3(), o._table3()))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Real, np.ndarray)):
            if np.any(np.asarray(other) == 0):
                raise SingularDivisionError("division of a jet by zero")
            return Jet(self.order, self.base_r, self.base_s, self.coeff / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return jet_combine("div", self, o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return jet_combine("div", o, self)

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return NotImplemented
        return jet_apply("pow_real", self, exponent)

    def __repr__(self):
        kind = f"batched[{len(self.base_r)}]" if self.batched else f"at ({self.base_r}, {self.base_s})"
        return f"Jet({self.order.max_r},{self.order.max_s} {kind}, value={self.value!r})"


# ---------------------------------------------------------------------------
# public operations


def jet_seed(value, role: str = "constant", order: JetOrder = DEFAULT_ORDER, *, base_r=None, base_s=None) -> Jet:
    """Create a constant or a variable seed.

    For ``var_r`` the base r is ``value``; for ``var_s`` the base s is ``value``.
    The other base coordinate defaults to 0 unless given.
    """
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"jet seed value must be finite, got {value!r}")
    value = _as_base(value) if isinstance(value, np.ndarray) else float(value)
    if role == "constant":
        br = value * 0.0 if base_r is None else base_r
        bs = value * 0.0 if base_s is None else base_s
    elif role == "var_r":
        br, bs = value, (value * 0.0 if base_s is None else base_s)
    elif role == "var_s":
        br, bs = (value * 0.0 if base_r is None else base_r), value
    else:
        raise InvalidInputError(f"unknown seed role {role!r}")
    br, bs = _as_base(br), _as_base(bs)
    batched = isinstance(value, np.ndarray)
    c = np.zeros(order.shape + ((len(value),) if batched else ()))
    c[0, 0] = value
    if role == "var_r" and order.max_r >= 1:
        c[1, 0] = 1.0
    if role == "var_s" and order.max_s >= 1:
        c[0, 1] = 1.0
    return Jet(order, br, bs, c)


def seed_pair(r0, s0, order: JetOrder = DEFAULT_ORDER):
    """Variable seeds for r and s sharing one base point (scalar or batched)."""
    if isinstance(r0, np.ndarray) or isinstance(s0, np.ndarray):
        r0, s0 = np.broadcast_arrays(np.asarray(r0, dtype=float), np.asarray(s0, dtype=float))
        r0 = np.array(r0.ravel())
        s0 = np.array(s0.ravel())
        tail = (len(r0),)
    else:
        r0, s0 = float(r0), float(s0)
        tail = ()
    if not (np.all(np.isfinite(r0)) and np.all(np.isfinite(s0))):
        raise InvalidInputError("jet seed values must be finite")
    cr = np.zeros(order.shape + tail)
    cs = np.zeros(order.shape + tail)
    cr[0, 0] = r0
    cs[0, 0] = s0
    if order.max_r >= 1:
        cr[1, 0] = 1.0
    if order.max_s >= 1:
        cs[0, 1] = 1.0
    return Jet(order, r0, s0, cr), Jet(order, r0, s0, cs)


def jet_combine(kind: str, a: Jet, b: Jet) -> Jet:
    a._check_compatible(b)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        b0 = b.coeff[0, 0]
        if np.any(b0 == 0) or not np.all(np.isfinite(b0)):
            raise SingularDivisionError("division by a series with zero constant term")
        return a._new(_kernels.div(a._table3(), b._table3()))
    raise InvalidInputError(f"unknown combine kind {kind!r}")


def _int_power(a: Jet, k: int) -> Jet:
    result = a.constant_like(1.0)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _taylor_table(kind, x, K, exponent=None):
    """Rows f^(k)(x)/k! for k = 0..K, vectorised over x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((K + 1, x.size))
    if kind == "exp":
        e = np.exp(x)
        for k in range(K + 1):
            out[k] = e / math.factorial(k)
    elif kind == "log":
        out[0] = np.log(x)
        for k in range(1, K + 1):
            out[k] = (-1.0) ** (k - 1) / (k * x**k)
    elif kind in ("sin", "cos"):
        cyc = [np.sin(x), np.cos(x), -np.sin(x), -np.cos(x)]
        shift = 0 if kind == "sin" else 1
        for k in range(K + 1):
            out[k] = cyc[(k + shift) % 4] / math.factorial(k)
    elif kind == "pow":
        out[0] = x**exponent
        for k in range(1, K + 1):
            out[k] = out[k - 1] * (exponent - k + 1) / (k * x)
    else:
        raise InvalidInputError(f"unknown function {kind!r}")
    return out


def jet_apply(kind: str, a: Jet, exponent=None) -> Jet:
    """Compose a univariate elementary function with a jet."""
    a0 = a.coeff[0, 0]
    if kind == "pow_real":
        if exponent is None or not np.isfinite(exponent):
            raise InvalidInputError("pow_real needs a finite exponent")
        exponent = float(exponent)
        if exponent.is_integer() and abs(exponent) <= 64:
            k = int(exponent)
            p = _int_power(a, abs(k))
            return p if k >= 0 else jet_combine("div", a.constant_like(1.0), p)
        if np.any(a0 <= 0):
            raise DomainError(f"pow_real({exponent}): constant term {_show(a0)} is not > 0", function="pow")
        fn = "pow"
    elif kind == "sqrt":
        if np.any(a0 <= 0):
            raise DomainError(f"sqrt: constant term {_show(a0)} is not > 0", function="sqrt")
        fn, exponent = "pow", 0.5
    elif kind == "log":
        if np.any(a0 <= 0):
            raise DomainError(f"log: constant term {_show(a0)} is not > 0", function="log")
        fn = "log"
    elif kind in ("exp", "sin", "cos"):
        fn = kind
    else:
        raise InvalidInputError(f"unknown function {kind!r}")
    K = a.order.max_r + a.order.max_s
    table = _taylor_table(fn, a0, K, exponent)
    if not np.all(np.isfinite(table)):
        raise DomainError(f"{kind}: non-finite Taylor coefficients at {_show(a0)}", function=kind)
    return a._new(_kernels.compose(a._table3(), np.ascontiguousarray(table)))


def _show(a0):
    if np.ndim(a0) == 0:
        return repr(float(a0))
    bad = np.asarray(a0)
    return f"min {bad.min()!r} over batch"


def derivative(a: Jet, i: int, j: int):
    """The partial d^(i+j) f / dr^i ds^j at the base point."""
    if not (0 <= i <= a.order.max_r and 0 <= j <= a.order.max_s):
        raise ContractError(f"derivative order ({i},{j}) outside carried order {a.order}")
    c = a.coeff[i, j] * (math.factorial(i) * math.factorial(j))
    return c.copy() if a.batched else float(c)


def common_order(*jets: Jet) -> JetOrder:
    order = jets[0].order
    for j in jets[1:]:
        order = order.meet(j.order)
    return order


def align(*jets: Jet):
    """Truncate jets to their common (smallest) order."""
    order = common_order(*jets)
    return tuple(j if j.order == order else j.truncate(order) for j in jets)


def sqrt(a):
    return jet_apply("sqrt", a) if isinstance(a, Jet) else math.sqrt(a)


def exp(a):
    return jet_apply("exp", a)


def log(a):
    return jet_apply("log", a)


def sin(a):
    return jet_apply("sin", a)


def cos(a):
    return jet_apply("cos", a)

"""Truncated Laurent series with tracked truncation windows.

A series here is a finite window of exactly known coefficients of a local
expansion: in t = z - c at a finite center c, or in w = 1/z at infinity.
`trunc` is the first exponent whose coefficient is *not* known, and every
arithmetic operation propagates the window honestly:

    add:   trunc = min(trunc_a, trunc_b)
    mul:   trunc = min(trunc_a + val_b, trunc_b + val_a)
    recip: trunc = trunc_a - 2*val_a
    compose (inner valuation v >= 1): capped at v * trunc_outer

Reading a coefficient at or past `trunc` raises SeriesWindowError, so a
truncation that was chosen too small surfaces as a hard error instead of a
silently wrong rational number.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import INF, Point, Poly, QQ0, QQ1, RatFun, Scalar, order_at, qq


class SeriesWindowError(ValueError):
    """A coefficient outside the exactly-known window was requested."""


@dataclass(frozen=True)
class LaurentSeries:
    """Window of known coefficients: sum of coeffs[i] * t^(min_exp+i).

    Invariants: trunc == min_exp + len(coeffs); coeffs[0] != 0 unless the
    series is zero on its whole window, in which case coeffs == () and
    min_exp == trunc.
    """

    center: Point
    min_exp: int
    coeffs: tuple
    trunc: int

    # -- basic queries ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def valuation(self) -> int:
        """Exponent of the first nonzero coefficient (== trunc when zero)."""
        return self.min_exp

    def coefficient(self, k: int):
        if k >= self.trunc:
            raise SeriesWindowError(
                f"coefficient at exponent {k} is outside the known window "
                f"(trunc={self.trunc}, center={self.center})"
            )
        if k < self.min_exp:
            return QQ0
        return self.coeffs[k - self.min_exp]

    def _require_same_center(self, other: "LaurentSeries"):
        if self.center != other.center:
            raise ValueError("series centers differ")

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        self._require_same_center(other)
        t = min(self.trunc, other.trunc)
        lo = min(self.min_exp, other.min_exp, t)
        vals = [self.coefficient(k) + other.coefficient(k) for k in range(lo, t)]
        return make_series(self.center, lo, vals, t)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.center, self.min_exp,
                             tuple(-c for c in self.coeffs), self.trunc)

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def scale(self, c) -> "LaurentSeries":
        c = qq(c)
        if c == 0:
            return zero_series(self.center, self.trunc)
        return LaurentSeries(self.center, self.min_exp,
                             tuple(c * a for a in self.coeffs), self.trunc)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by t^k."""
        return LaurentSeries(self.center, self.min_exp + k, self.coeffs,
                             self.trunc + k)

    def add_scalar(self, c) -> "LaurentSeries":
        """Add an exactly known constant."""
        c = qq(c)
        if c == 0:
            return self
        if self.trunc <= 0:
            raise SeriesWindowError("window ends before exponent 0")
        lo = min(self.min_exp, 0)
        vals = [self.coefficient(k) for k in range(lo, self.trunc)]
        vals[0 - lo] += c
        return make_series(self.center, lo, vals, self.trunc)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        self._require_same_center(other)
        t = min(self.trunc + other.min_exp, other.trunc + self.min_exp)
        if self.is_zero or other.is_zero:
            return zero_series(self.center, t)
        lo = self.min_exp + other.min_exp
        out = [QQ0] * (t - lo)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            ei = self.min_exp + i
            jmax = min(len(other.coeffs), t - ei - other.min_exp)
            for j in range(jmax):
                b = other.coeffs[j]
                if b != 0:
                    out[ei + other.min_exp + j - lo] += a * b
        return make_series(self.center, lo, out, t)

    def recip(self) -> "LaurentSeries":
        if self.is_zero:
            raise ZeroDivisionError("reciprocal of a zero series")
        v = self.min_exp
        c = self.coeffs
        n = len(c)
        inv0 = 1 / c[0]
        out = [QQ0] * n
        out[0] = inv0
        for k in range(1, n):
            acc = QQ0
            for i in range(1, k + 1):
                if i < n and c[i] != 0:
                    acc += c[i] * out[k - i]
            out[k] = -acc * inv0
        return make_series(self.center, -v, out, self.trunc - 2 * v)

    def __truediv__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self * other.recip()

    def pow(self, n: int) -> "LaurentSeries":
        if n < 0:
            return self.recip().pow(-n)
        if n == 0:
            return make_series(self.center, 0, [QQ1],
                               max(1, self.trunc - self.min_exp))
        out = None
        base = self
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- calculus ----------------------------------------------------------

    def derivative(self) -> "LaurentSeries":
        """d/dt in the local coordinate of the center."""
        vals = [qq(k) * self.coefficient(k)
                for k in range(self.min_exp, self.trunc)]
        return make_series(self.center, self.min_exp - 1, vals, self.trunc - 1)

    def integrate(self) -> "LaurentSeries":
        """Antiderivative with zero constant; errors on a 1/t term."""
        vals = []
        for k in range(self.min_exp, self.trunc):
            c = self.coefficient(k)
            if k == -1:
                if c != 0:
                    raise ValueError("series has a 1/t term; no Laurent antiderivative")
                vals.append(QQ0)  # placeholder for exponent 0
            else:
                vals.append(c / qq(k + 1))
        return make_series(self.center, self.min_exp + 1, vals, self.trunc + 1)

    def residue(self):
        """Coefficient of t^(-1); the window must reach exponent -1."""
        return self.coefficient(-1)

    # -- window management ---------------------------------------------------

    def capped(self, t: int) -> "LaurentSeries":
        """Forget coefficients at exponents >= t (never extends the window)."""
        if t >= self.trunc:
            return self
        if t <= self.min_exp:
            return zero_series(self.center, t)
        return make_series(self.center, self.min_exp,
                           list(self.coeffs[: t - self.min_exp]), t)

    def __str__(self) -> str:
        if self.is_zero:
            return f"O(t^{self.trunc})"
        bits = [f"{c}*t^{self.min_exp + i}"
                for i, c in enumerate(self.coeffs) if c != 0]
        return " + ".join(bits) + f" + O(t^{self.trunc})"


def make_series(center: Point, min_exp: int, vals, trunc: int) -> LaurentSeries:
    """Normalize: trim leading zeros, collapse all-zero windows."""
    vals = list(vals)
    if trunc != min_exp + len(vals):
        raise ValueError("inconsistent series window")
    k = 0
    while k < len(vals) and vals[k] == 0:
        k += 1
    if k == len(vals):
        return LaurentSeries(center, trunc, (), trunc)
    return LaurentSeries(center, min_exp + k, tuple(qq(v) for v in vals[k:]), trunc)


def zero_series(center: Point, trunc: int) -> LaurentSeries:
    return LaurentSeries(center, trunc, (), trunc)


def constant_series(center: Point, value, trunc: int) -> LaurentSeries:
    return make_series(center, 0, [qq(value)] + [QQ0] * (trunc - 1), trunc)


def _poly_window(p: Poly, c, length: int) -> list:
    """First `length` Taylor coefficients of p at the finite point c."""
    shifted = p.taylor_shift(c) if c != 0 else p
    cs = list(shifted.coeffs[:length])
    return cs + [QQ0] * (length - len(cs))


def expand(f: RatFun, center: Point, trunc: int) -> LaurentSeries:
    """Laurent expansion of f with window ending exactly at `trunc`.

    At infinity the expansion is in w = 1/z (so f = sum c_k w^k).
    """
    if not f:
        return zero_series(center, trunc)
    if center.is_infinity:
        dn, dd = f.num.degree, f.den.degree
        shift = dd - dn
        m = max(1, trunc - min(shift, 0) + 2)
        num_w = make_series(center, 0, _poly_window(f.num.reversed_coeffs(), QQ0, m), m)
        den_w = make_series(center, 0, _poly_window(f.den.reversed_coeffs(), QQ0, m), m)
        out = (num_w / den_w).shift(shift)
    else:
        c = center.value
        v_den = f.den.root_multiplicity(c)
        m = trunc + 2 * v_den + 2
        num_s = make_series(center, 0, _poly_window(f.num, c, m), m)
        den_s = make_series(center, 0, _poly_window(f.den, c, m), m)
        out = num_s / den_s
    if out.trunc < trunc:
        raise SeriesWindowError("internal: expansion window fell short")
    return out.capped(trunc)


def series_residue(f: RatFun, p: Point):
    """Residue of f dz at p computed through a local Laurent expansion."""
    if not f:
        return QQ0
    if p.is_infinity:
        # f dz = -f(1/w)/w^2 dw, so Res = -[w^1] of the w-expansion of f
        return -expand(f, INF, 2).coefficient(1)
    return expand(f, p, 0).residue()


def series_compose(outer: LaurentSeries, inner: LaurentSeries) -> LaurentSeries:
    """Substitute: outer evaluated along inner.

    inner is a series at its own center whose values approach outer.center;
    concretely the local coordinate of outer pulled back through inner must
    have valuation >= 1.  For a finite outer center c that pullback is
    (inner - c); for outer centered at infinity it is 1/inner.
    """
    if outer.center.is_infinity:
        if inner.is_zero:
            raise ValueError("cannot compose: inner series is zero")
        p = inner.recip()
    else:
        if inner.min_exp < 0:
            raise ValueError("inner series has a pole; cannot reach a finite center")
        if inner.trunc <= 0 or inner.coefficient(0) != outer.center.value:
            raise ValueError("inner constant term does not match the outer center")
        p = inner.add_scalar(-outer.center.value)
    if p.is_zero:
        raise ValueError("inner series is constant to its window")
    v = p.valuation
    if v < 1:
        raise ValueError("inner local coordinate must have positive valuation")
    cap = v * outer.trunc
    # nonnegative-exponent part by Horner (coefficient() fills zeros below
    # the valuation, so the chain is anchored at exponent 0)
    acc = None
    for k in range(outer.trunc - 1, -1, -1):
        if acc is None:
            acc = constant_series(p.center, outer.coefficient(k), p.trunc)
        else:
            acc = (acc * p).add_scalar(outer.coefficient(k))
    result = acc if acc is not None else zero_series(p.center, cap)
    # principal part through reciprocal powers
    if outer.min_exp < 0:
        pinv = p.recip()
        neg = None
        for k in range(outer.min_exp, 0):
            c = outer.coefficient(k)
            if neg is None:
                neg = constant_series(p.center, c, pinv.trunc + 2 * abs(v))
            else:
                neg = neg.add_scalar(c)
            neg = neg * pinv
        result = result + neg
    return result.capped(cap)


def galois_involution_series(x: RatFun, a: Point, trunc: int) -> LaurentSeries:
    """Local deck transformation of x at a simple critical point a.

    Returns the series of s(z) in t = z - a (constant term a) with
    x(s(z)) = x(z), s != id, computed by Newton iteration from the seed
    s0(z) = a - (z - a).  Checks x o s = x, s o s = id, s'(a) = -1
    to the working window before returning.
    """
    if a.is_infinity:
        raise ValueError("involution at infinity is not supported")
    if order_at(x, a) < 0:
        raise ValueError(f"x has a pole at {a}; no local involution")
    work = trunc + 4
    xs = expand(x, a, work)
    local = xs.add_scalar(-xs.coefficient(0))
    if local.is_zero or local.valuation != 2:
        raise ValueError(
            f"{a} is not a simple critical point of x "
            f"(local valuation {'inf' if local.is_zero else local.valuation})"
        )
    xp = xs.derivative()
    s = make_series(a, 0, [a.value, qq(-1)] + [QQ0] * (work - 2), work)
    for _ in range(64):
        err = series_compose(xs, s) - xs
        if err.is_zero:
            break
        delta = err / series_compose(xp, s)
        s = s - delta
    else:  # pragma: no cover - Newton converges quadratically
        raise ArithmeticError("involution iteration failed to converge")
    if not (series_compose(xs, s) - xs).is_zero:
        raise ArithmeticError("involution does not preserve x to the working window")
    ident = make_series(a, 0, [a.value, QQ1] + [QQ0] * (work - 2), work)
    if not (series_compose(s, s) - ident).capped(work - 2).is_zero:
        raise ArithmeticError("involution does not square to the identity")
    if s.coefficient(1) != -1:
        raise ArithmeticError("involution derivative at the branchpoint is not -1")
    return s.capped(trunc)

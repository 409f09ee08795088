"""Exact rational arithmetic on the projective line.

Scalars are arbitrary-precision rationals (gmpy2.mpq when available,
fractions.Fraction otherwise).  On top of those this module builds dense
polynomials, reduced rational functions, points of P^1 including infinity,
and the handful of exact operations everything downstream leans on:
rational root finding, order/evaluation at a point, residues by
partial-fraction logic, and residue-free antiderivatives.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

try:
    from gmpy2 import mpq as _mpq

    def qq(num=0, den=1):
        """Exact rational scalar."""
        return _mpq(num, den)

    BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as _Fraction

    def qq(num=0, den=1):
        """Exact rational scalar."""
        return _Fraction(num, den)

    BACKEND = "fractions"

Scalar = type(qq(0))

QQ0 = qq(0)
QQ1 = qq(1)

# Strict rational literal: optional sign, integer, optional /integer.
# Anything with a decimal point, exponent, or whitespace is rejected, which
# is what keeps floats out of the file formats.
_RATIONAL_RE = re.compile(r"^[+-]?\d+(/-?\d+)?$")


def parse_rational(text: str) -> Scalar:
    """Parse a strict 'p' or 'p/q' literal into a Scalar.

    Raises ValueError on anything else (floats, whitespace, empty string,
    zero denominators).
    """
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not an exact rational literal: {text!r}")
    if "/" in text:
        num_s, den_s = text.split("/")
        den = int(den_s)
        if den == 0:
            raise ValueError(f"zero denominator in rational literal: {text!r}")
        return qq(int(num_s), den)
    return qq(int(text))


def scalar_str(value) -> str:
    """Canonical 'p/q' form (always includes the denominator, e.g. '0/1')."""
    v = qq(value)
    return f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class Point:
    """A point of P^1 over Q: a finite rational value, or infinity (value=None)."""

    value: object = None

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    @staticmethod
    def finite(v) -> "Point":
        return Point(qq(v))

    def __str__(self) -> str:
        return "inf" if self.value is None else scalar_str(self.value)

    def sort_key(self):
        # Finite points ordered by value, infinity last.
        if self.is_infinity:
            return (1, QQ0)
        return (0, self.value)


INF = Point(None)


def parse_point(text: str) -> Point:
    if text == "inf":
        return INF
    return Point(parse_rational(text))


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


def _trim(coeffs: list) -> tuple:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return tuple(coeffs[:n])


@dataclass(frozen=True)
class Poly:
    """Dense univariate polynomial over Q, ascending coefficients, trimmed."""

    coeffs: tuple = ()

    @staticmethod
    def of(seq: Iterable) -> "Poly":
        return Poly(_trim([qq(c) for c in seq]))

    @staticmethod
    def const(c) -> "Poly":
        return Poly.of([c])

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def leading(self):
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __add__(self, other: "Poly") -> "Poly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Poly(_trim(out))

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        out = [QQ0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
        return Poly(_trim(out))

    def scale(self, c) -> "Poly":
        c = qq(c)
        if c == 0:
            return Poly()
        return Poly(tuple(c * a for a in self.coeffs))

    def shift_up(self, k: int) -> "Poly":
        """Multiply by z^k."""
        if not self.coeffs:
            return self
        return Poly((QQ0,) * k + self.coeffs)

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative polynomial power")
        out = Poly.of([1])
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quo = [QQ0] * (dq + 1)
        lead = other.coeffs[-1]
        db = other.degree
        for k in range(dq, -1, -1):
            c = rem[k + db] / lead
            quo[k] = c
            if c != 0:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= c * b
        return Poly(_trim(quo)), Poly(_trim(rem))

    def __floordiv__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r:
            raise ValueError("polynomial division was not exact")
        return q

    def monic(self) -> "Poly":
        if not self.coeffs:
            return self
        return self.scale(1 / self.leading)

    def derivative(self) -> "Poly":
        return Poly(_trim([qq(k) * c for k, c in enumerate(self.coeffs)][1:]))

    def eval(self, v):
        """Horner evaluation at a finite scalar."""
        acc = QQ0
        for c in reversed(self.coeffs):
            acc = acc * v + c
        return acc

    def taylor_shift(self, c) -> "Poly":
        """Coefficients of p(c + t) as a polynomial in t."""
        c = qq(c)
        cs = list(self.coeffs)
        out = []
        while cs:
            if len(cs) == 1:
                out.append(cs[0])
                cs = []
                break
            # synthetic division by (z - c); remainder is the next Taylor coeff
            d = len(cs) - 1
            q = [QQ0] * d
            acc = cs[d]
            for k in range(d - 1, -1, -1):
                q[k] = acc
                acc = cs[k] + c * acc
            out.append(acc)
            cs = q
        return Poly(_trim(out))

    def root_multiplicity(self, v) -> int:
        """Multiplicity of v as a root (0 if not a root)."""
        if not self.coeffs:
            raise ValueError("zero polynomial")
        shifted = self.taylor_shift(v)
        m = 0
        while shifted.coeffs[m] == 0:
            m += 1
        return m

    def reversed_coeffs(self, length: int | None = None) -> "Poly":
        """z^d * p(1/z) padded to the given coefficient length (default deg+1)."""
        n = length if length is not None else len(self.coeffs)
        if n < len(self.coeffs):
            raise ValueError("reversal length shorter than polynomial")
        padded = self.coeffs + (QQ0,) * (n - len(self.coeffs))
        return Poly(_trim(list(reversed(padded))))


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm."""
    while b:
        a, b = b, a % b
    return a.monic() if a else a


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: p (monic) = prod g_i^i with the g_i squarefree, coprime.

    Returns [(g_i, i)] for the nontrivial factors only.
    """
    if not p:
        raise ValueError("zero polynomial")
    p = p.monic()
    if p.degree == 0:
        return []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p.exact_div(a)
    c = dp.exact_div(a)
    d = c - b.derivative()
    out: list[tuple[Poly, int]] = []
    i = 1
    while b.degree > 0:
        g = poly_gcd(b, d)
        if g.degree > 0:
            out.append((g, i))
        b = b.exact_div(g)
        c = d.exact_div(g)
        d = c - b.derivative()
        i += 1
    return out


def _int_divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _rational_roots_squarefree(g: Poly) -> list:
    """All rational roots of a squarefree polynomial (each simple)."""
    roots = []
    # Strip a root at zero first so the trailing coefficient is nonzero.
    if g.coeffs[0] == 0:
        roots.append(QQ0)
        g = Poly(g.coeffs[1:])
    if g.degree <= 0:
        return roots
    # Clear denominators to a primitive integer polynomial.
    den_lcm = 1
    for c in g.coeffs:
        den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, int(c.denominator))
    ints = [int(c.numerator) * (den_lcm // int(c.denominator)) for c in g.coeffs]
    content = 0
    for v in ints:
        content = math.gcd(content, v)
    ints = [v // content for v in ints]
    a0, ad = ints[0], ints[-1]
    seen = set()
    for p in _int_divisors(a0):
        for q in _int_divisors(ad):
            if math.gcd(p, q) != 1:
                continue
            for cand in (qq(p, q), qq(-p, q)):
                if cand in seen:
                    continue
                seen.add(cand)
                if g.eval(cand) == 0:
                    roots.append(cand)
    return roots


def rational_zeros(p: Poly) -> tuple[list[tuple[Point, int]], bool]:
    """Rational zeros of p with multiplicities, plus a fully-split flag.

    fully_split is True exactly when the multiplicities of the rational
    zeros account for the whole degree of p.
    """
    if not p:
        raise ValueError("rational_zeros of the zero polynomial")
    found: list[tuple[Point, int]] = []
    total = 0
    for factor, mult in squarefree_decomposition(p):
        for r in _rational_roots_squarefree(factor):
            found.append((Point(r), mult))
            total += mult
    found.sort(key=lambda pair: pair[0].sort_key())
    return found, total == p.degree


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatFun:
    """Reduced rational function: gcd(num, den) = 1, den monic and nonzero."""

    num: Poly
    den: Poly

    @staticmethod
    def make(num: Poly, den: Poly) -> "RatFun":
        if not den:
            raise ZeroDivisionError("rational function with zero denominator")
        if not num:
            return RatFun(Poly(), Poly.of([1]))
        g = poly_gcd(num, den)
        if g.degree > 0:
            num = num.exact_div(g)
            den = den.exact_div(g)
        lead = den.leading
        if lead != 1:
            num = num.scale(1 / lead)
            den = den.scale(1 / lead)
        return RatFun(num, den)

    @staticmethod
    def of(num_coeffs: Sequence, den_coeffs: Sequence = (1,)) -> "RatFun":
        return RatFun.make(Poly.of(num_coeffs), Poly.of(den_coeffs))

    @staticmethod
    def const(c) -> "RatFun":
        return RatFun.of([c])

    def __bool__(self) -> bool:
        return bool(self.num)

    @property
    def is_constant(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def __add__(self, other: "RatFun") -> "RatFun":
        return RatFun.make(self.num * other.den + other.num * self.den,
                           self.den * other.den)

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __sub__(self, other: "RatFun") -> "RatFun":
        return self + (-other)

    def __mul__(self, other: "RatFun") -> "RatFun":
        return RatFun.make(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RatFun") -> "RatFun":
        if not other:
            raise ZeroDivisionError("division by the zero rational function")
        return RatFun.make(self.num * other.den, self.den * other.num)

    def scale(self, c) -> "RatFun":
        return RatFun.make(self.num.scale(c), self.den)

    def derivative(self) -> "RatFun":
        return RatFun.make(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    def substitute_reciprocal(self) -> "RatFun":
        """f(1/z) as a reduced rational function of z."""
        dn, dd = self.num.degree, self.den.degree
        if dn < 0:
            return self
        rn = self.num.reversed_coeffs()
        rd = self.den.reversed_coeffs()
        if dd >= dn:
            return RatFun.make(rn.shift_up(dd - dn), rd)
        return RatFun.make(rn, rd.shift_up(dn - dd))


def ratfun_make(num: Poly | Sequence, den: Poly | Sequence = (1,)) -> RatFun:
    """Build a reduced RatFun from numerator/denominator data."""
    n = num if isinstance(num, Poly) else Poly.of(num)
    d = den if isinstance(den, Poly) else Poly.of(den)
    return RatFun.make(n, d)


def derivative(f: RatFun) -> RatFun:
    return f.derivative()


def evaluate(f: RatFun, p: Point):
    """Value of f at p as a Scalar, or INF (as a Point) at a pole.

    At infinity the value is lim f(z) as z -> inf.
    """
    if p.is_infinity:
        dn, dd = f.num.degree, f.den.degree
        if dn < 0:
            return QQ0
        if dn > dd:
            return INF
        if dn < dd:
            return QQ0
        return f.num.leading / f.den.leading
    dval = f.den.eval(p.value)
    if dval == 0:
        return INF
    return f.num.eval(p.value) / dval


def order_at(f: RatFun, p: Point) -> int:
    """Vanishing order of f at p (negative at poles).  f must be nonzero."""
    if not f:
        raise ValueError("order_at of the zero function")
    if p.is_infinity:
        return f.den.degree - f.num.degree
    v = p.value
    return f.num.root_multiplicity(v) - f.den.root_multiplicity(v)


def residue_at(f: RatFun, p: Point):
    """Residue of the differential f dz at p, by partial-fraction logic.

    Uses the derivative formula Res = g^(m-1)(p)/(m-1)! with
    g = f*(z-p)^m, carried in the form N_k / D0^(k+1) so no rational
    function reduction happens mid-stream.  At infinity: substitute
    z = 1/w, Res_inf f dz = Res_0 (-f(1/w)/w^2) dw.
    """
    if not f:
        return QQ0
    if p.is_infinity:
        g = f.substitute_reciprocal()
        h = RatFun.make(-g.num, g.den * Poly.of([0, 0, 1]))
        return residue_at(h, Point(QQ0))
    m = -order_at(f, p)
    if m <= 0:
        return QQ0
    shifted_den = f.den.taylor_shift(p.value)
    # strip the (z-p)^m factor: in shifted coordinates it is t^m
    d0 = Poly(shifted_den.coeffs[m:])
    nk = f.num.taylor_shift(p.value)
    fact = 1
    for k in range(m - 1):
        nk = nk.derivative() * d0 - nk.scale(k + 1) * d0.derivative()
        fact *= k + 1
    return nk.eval(QQ0) / (d0.eval(QQ0) ** m * qq(fact))


class NonzeroResidueError(ValueError):
    """Raised when an antiderivative would need a logarithm.

    Carries one offending pole and its residue when they are rational;
    pole is None when the obstruction sits at irrational poles only.
    """

    def __init__(self, pole: Point | None, residue=None):
        self.pole = pole
        self.residue = residue
        if pole is None:
            msg = "differential has a nonzero residue at an irrational pole"
        else:
            msg = f"differential has nonzero residue {scalar_str(residue)} at {pole}"
        super().__init__(msg)


def _linear_solve(rows: list[list], rhs: list) -> list:
    """Solve a square exact linear system by Gaussian elimination."""
    n = len(rows)
    aug = [list(rows[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular linear system")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def residue_free_antiderivative(f: RatFun) -> RatFun:
    """Exact rational antiderivative of f, when f dz has no residues.

    Ostrogradsky/Horowitz: with Q2 = gcd(Q, Q'), Q1 = Q/Q2, solve
        R = A'*Q1 - A*(Q2'*Q1/Q2) + B*Q2,   deg A < deg Q2, deg B < deg Q1,
    where f = P/Q = (A/Q2)' + B/Q1 after polynomial division.  A nonzero B
    means a genuine residue somewhere; we then report a rational offending
    pole when Q1 has one.  The constant of integration is zero.
    """
    if not f:
        return RatFun.of([0])
    poly_part, rem = f.num.divmod(f.den)
    # integrate the polynomial part directly
    int_poly = Poly(_trim([QQ0] + [c / qq(k + 1) for k, c in enumerate(poly_part.coeffs)]))
    if not rem:
        return RatFun.make(int_poly, Poly.of([1]))
    q = f.den
    q2 = poly_gcd(q, q.derivative())
    q1 = q.exact_div(q2)
    # T = Q2' * Q1 / Q2  (exact because Q2' * Q1 is divisible by Q2 in char 0
    # ... not in general; T := (Q2)' * Q1 / Q2 is exact since every prime
    # factor of Q2 divides Q to order >= 2, hence divides Q2'*Q1 to the
    # required order).  Compute as exact division of Q2'*Q1 by Q2.
    t = (q2.derivative() * q1).exact_div(q2) if q2.degree > 0 else Poly()
    na, nb = q2.degree, q1.degree
    # unknowns: a_0..a_{na-1}, b_0..b_{nb-1}
    n_unknown = na + nb
    rows = [[QQ0] * n_unknown for _ in range(n_unknown)]
    rhs = [QQ0] * n_unknown
    for k, c in enumerate(rem.coeffs):
        rhs[k] = c
    for j in range(na):
        # contribution of a_j: derivative term j*z^{j-1}*Q1 minus z^j*T
        if j > 0:
            for i, c in enumerate(q1.coeffs):
                col_idx = j - 1 + i
                rows[col_idx][j] += qq(j) * c
        for i, c in enumerate(t.coeffs):
            rows[j + i][j] -= c
    for j in range(nb):
        for i, c in enumerate(q2.coeffs):
            rows[j + i][na + j] += c
    sol = _linear_solve(rows, rhs)
    a = Poly(_trim(sol[:na]))
    b = Poly(_trim(sol[na:]))
    if b:
        # Some residue is nonzero.  Point at a rational pole if one exists.
        zeros, _split = rational_zeros(q1)
        for pt, _m in zeros:
            res = b.eval(pt.value) / q1.derivative().eval(pt.value)
            if res != 0:
                raise NonzeroResidueError(pt, res)
        # residues of B/Q1 dz at infinity: -[coefficient of 1/z]
        res_inf = -b.coeffs[q1.degree - 1] if b.degree == q1.degree - 1 else QQ0
        if res_inf != 0:
            raise NonzeroResidueError(INF, res_inf)
        raise NonzeroResidueError(None)
    return RatFun.make(int_poly * q2 + a, q2)

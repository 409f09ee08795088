"""Spectral curve data model on P^1: regularity, branchpoints, poles, swap.

A curve is a pair of nonconstant rational functions (x, y) of the global
coordinate z.  Regularity means: the critical points of x (zeros of x')
are simple, disjoint from critical points of y and from poles of x and y,
and everything needed downstream (critical points, poles) is rational so
the exact engine can see it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import (INF, Point, QQ0, RatFun, Scalar, evaluate, order_at,
                      rational_zeros, scalar_str)
from .series import LaurentSeries, galois_involution_series, series_residue

SWAP_SUFFIX = "~swap"
DEFAULT_INVOLUTION_TRUNC = 12


@dataclass(frozen=True)
class SpectralCurve:
    """Genus-zero spectral curve: global coordinate z, data (name, x, y)."""

    name: str
    x: RatFun
    y: RatFun

    def __post_init__(self):
        if self.x.is_constant:
            raise ValueError("x must be nonconstant")
        if self.y.is_constant:
            raise ValueError("y must be nonconstant")


def swap(c: SpectralCurve) -> SpectralCurve:
    """Exchange the roles of x and y (an involution, including the name)."""
    if c.name.endswith(SWAP_SUFFIX):
        new_name = c.name[: -len(SWAP_SUFFIX)]
    else:
        new_name = c.name + SWAP_SUFFIX
    return SpectralCurve(new_name, c.y, c.x)


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    where: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    curve_name: str
    passed: bool
    issues: tuple


class CurveValidationError(ValueError):
    """A curve failed the regularity/exactness checks."""

    def __init__(self, report: ValidationReport):
        self.report = report
        lines = [f"curve {report.curve_name!r} failed validation:"]
        lines += [f"  [{i.kind}] at {i.where}: {i.detail}" for i in report.issues]
        super().__init__("\n".join(lines))


def _finite_zero_points(p) -> tuple[list[tuple[Point, int]], bool]:
    if p.degree <= 0:
        return [], True
    return rational_zeros(p)


def validate_regular(c: SpectralCurve) -> ValidationReport:
    """Check regularity plus the exact-mode rationality requirements.

    Failures are collected in the report, never raised.
    """
    issues = []

    def bad(kind: str, where, detail: str):
        issues.append(ValidationIssue(kind, str(where), detail))

    xp = c.x.derivative()
    yp = c.y.derivative()
    zx, split_x = _finite_zero_points(xp.num)
    zy, split_y = _finite_zero_points(yp.num)
    if not split_x:
        bad("irrational-critical-points", "x'",
            "numerator of x' does not split over Q")
    if not split_y:
        bad("irrational-critical-points", "y'",
            "numerator of y' does not split over Q")
    for f, label in ((c.x, "x"), (c.y, "y")):
        if f.den.degree > 0:
            _zeros, split = rational_zeros(f.den)
            if not split:
                bad("irrational-poles", label,
                    f"denominator of {label} does not split over Q")
    # A zero of the form dx at infinity would be a branchpoint we cannot
    # carry (BranchPointData locations are finite); reject explicitly.
    if order_at(xp, INF) - 2 > 0:
        bad("branchpoint-at-infinity", INF,
            "the form dx has a zero at infinity")
    dy_zeros = {pt for pt, _m in zy}
    for pt, mult in zx:
        if mult > 1:
            bad("non-simple-critical-point", pt,
                f"x' vanishes to order {mult}")
        if pt in dy_zeros:
            bad("shared-critical-point", pt, "x' and y' both vanish")
        if order_at(c.x, pt) < 0:
            bad("critical-point-at-pole", pt, "x has a pole at a zero of x'")
        if order_at(c.y, pt) < 0:
            bad("critical-point-at-pole", pt, "y has a pole at a zero of x'")
    return ValidationReport(c.name, not issues, tuple(issues))


def require_regular(c: SpectralCurve) -> ValidationReport:
    report = validate_regular(c)
    if not report.passed:
        raise CurveValidationError(report)
    return report


@dataclass(frozen=True)
class BranchPointData:
    """A simple critical point of x with its local deck transformation.

    involution is the series of s_a(z) in t = z - a (constant term a),
    with x(s_a(z)) = x(z) and s_a' (a) = -1, to its stated truncation.
    """

    location: Point
    x_value: Scalar
    involution: LaurentSeries


def branchpoints(c: SpectralCurve,
                 trunc: int = DEFAULT_INVOLUTION_TRUNC) -> tuple[BranchPointData, ...]:
    """All branchpoints of c with involutions to the requested truncation."""
    require_regular(c)
    zeros, _split = _finite_zero_points(c.x.derivative().num)
    out = []
    for pt, _mult in zeros:
        s = galois_involution_series(c.x, pt, trunc)
        out.append(BranchPointData(
            location=pt,
            x_value=evaluate(c.x, pt),
            involution=s,
        ))
    return tuple(out)


@dataclass(frozen=True)
class PoleRecord:
    """A pole of x or y with both pole orders and the local time.

    d / d_tilde are the pole orders of x / y there (0 if regular), and
    time is the residue of the 1-form y dx at the location.
    """

    location: Point
    d: int
    d_tilde: int
    time: Scalar


def form_order_at(f: RatFun, p: Point) -> int:
    """Order of the differential f dz at p (dz = -dw/w^2 at infinity)."""
    if p.is_infinity:
        return order_at(f, p) - 2
    return order_at(f, p)


def pole_records(c: SpectralCurve) -> tuple[PoleRecord, ...]:
    """Union of the poles of x and y, with orders and times; sum of times is 0."""
    require_regular(c)
    locations: list[Point] = []
    for f in (c.x, c.y):
        if f.den.degree > 0:
            for pt, _m in rational_zeros(f.den)[0]:
                if pt not in locations:
                    locations.append(pt)
        if order_at(f, INF) < 0 and INF not in locations:
            locations.append(INF)
    locations.sort(key=Point.sort_key)
    ydx = c.y * c.x.derivative()
    records = []
    for pt in locations:
        d = max(0, -order_at(c.x, pt))
        d_tilde = max(0, -order_at(c.y, pt))
        if d + d_tilde < 1:
            raise AssertionError(f"pole inventory produced a non-pole at {pt}")
        records.append(PoleRecord(pt, d, d_tilde, series_residue(ydx, pt)))
    total = sum((r.time for r in records), QQ0)
    if total != 0:
        raise AssertionError(
            f"times of {c.name} sum to {scalar_str(total)}, expected 0")
    return tuple(records)

"""Correlator computation by residue recursion at the branchpoints.

For 2g-2+n > 0 the n-point correlator is a symmetric differential whose
only poles sit at the branchpoints, so it is stored as a coefficient map
on n-tuples of basis differentials dz/(z-a)^k (k >= 2).  The recursion

    w_{g,n}(z1, J) = sum_a Res_{z->a} K_a(z1, z) [ w_{g-1,n+1}(z, s(z), J)
                     + sum' w_{h,1+|I|}(z, I) w_{g-h,1+|I'|}(s(z), I') ]

is assembled per branchpoint: every sub-correlator slot is expanded either
at z (series in t = z - a) or at s_a(z) (composition with the involution),
spectator slots stay symbolic basis elements, and the residue against each
kernel order produces the slot-1 basis coefficients.  The pair
(h, I) = (0, empty) and (g, J) terms are excluded; w_{0,2} never enters the
Correlator type and is handled by dedicated expansion families.

All series windows are truncation-tracked; reads past a window raise, and
every level is recomputed at truncation +2 and compared bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import INF, Point, Poly, QQ0, RatFun, Scalar, qq
from .curve import BranchPointData, SpectralCurve, branchpoints
from .series import (LaurentSeries, expand, galois_involution_series,
                     make_series, series_compose, zero_series)


def max_basis_order(g: int, n: int) -> int:
    """Largest pole order any slot of w_{g,n} can carry: 6g + 2n - 4."""
    return 6 * g + 2 * n - 4


@dataclass(frozen=True)
class BasisElem:
    """The differential dz/(z - branchpoint)^order; order >= 2 always."""

    branchpoint: Point
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("basis differentials have order >= 2 (no simple poles)")


@dataclass
class Correlator:
    """Coefficient map of w_{g,n} on n-tuples of BasisElem.

    Keys are stored exactly as the recursion produces them (slot 1 from
    kernel residues, spectators from sub-correlators); permutation symmetry
    of the map is a theorem about the recursion, not an input normalization.
    """

    g: int
    n: int
    coeffs: dict

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, key):
        return self.coeffs.get(tuple(key), QQ0)

    def support_size(self) -> int:
        return len(self.coeffs)

    def max_order(self) -> int:
        return max((e.order for key in self.coeffs for e in key), default=0)

    def is_permutation_symmetric(self) -> bool:
        """True when the map is invariant under every slot permutation.

        Adjacent transpositions generate the symmetric group, so checking
        them pointwise suffices.
        """
        for key, val in self.coeffs.items():
            for i in range(self.n - 1):
                swapped = list(key)
                swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
                if self.coeffs.get(tuple(swapped), QQ0) != val:
                    return False
        return True


@dataclass(frozen=True)
class KernelExpansion:
    """Pole-basis expansion at one branchpoint.

    terms[m] is the t-series multiplying dz1/(z1-a)^m; reading the same
    data at a fixed t-exponent instead gives the z1-differential rows.
    """

    branchpoint: Point
    terms: dict


def omega01(c: SpectralCurve) -> RatFun:
    """dz-coefficient of the unstable (0,1) form: y * x'."""
    return c.y * c.x.derivative()


def _involution_pieces(c: SpectralCurve, a: Point, trunc: int):
    """Involution s, sigma = s - a, sigma', and the kernel prefactor R.

    R is -(1/2) / [(y - y o s) * x'], a series of valuation exactly -2.
    """
    s = galois_involution_series(c.x, a, trunc)
    sigma = s.add_scalar(-a.value)
    ys = series_compose(expand(c.y, a, trunc), s)
    dhat = (expand(c.y, a, trunc) - ys) * expand(c.x, a, trunc).derivative()
    if dhat.is_zero:
        raise ArithmeticError(
            f"kernel denominator at {a} vanishes identically to truncation {trunc}")
    if dhat.valuation != 2:
        raise ArithmeticError(
            f"kernel denominator at {a} vanishes to order {dhat.valuation}, expected 2")
    return s, sigma, sigma.derivative(), dhat.recip().scale(qq(-1, 2))


def _exact_power_series(a: Point, exponent: int, coeff, trunc: int) -> LaurentSeries:
    """The exactly-known series coeff * t^exponent on a window ending at trunc."""
    if exponent >= trunc:
        raise ValueError("window too small for the requested monomial")
    return make_series(a, exponent, [coeff] + [QQ0] * (trunc - exponent - 1), trunc)


def omega02_transition(c: SpectralCurve, a, trunc: int,
                       jmax: int | None = None) -> KernelExpansion:
    """z1-pole expansion of int_{s_a(z)}^{z} of the second-kind form.

    The increment 1/(z1-z) - 1/(z1-s_a(z)) expands (geometric series in the
    second argument) as sum_{j>=1} (t^j - sigma^j) / (z1-a)^(j+1); the j=0
    terms cancel because s_a(a) = a.  terms[m] is the series for pole order
    m = j+1 in z1.
    """
    loc = a.location if isinstance(a, BranchPointData) else a
    _s, sigma, _sp, _r = _involution_pieces(c, loc, trunc)
    if jmax is None:
        jmax = trunc - 1
    terms = {}
    for j in range(1, jmax + 1):
        tj = _exact_power_series(loc, j, qq(1), sigma.trunc + j)
        terms[j + 1] = tj - sigma.pow(j)
    return KernelExpansion(loc, terms)


def kernel_expansion(c: SpectralCurve, a, trunc: int,
                     jmax: int | None = None) -> KernelExpansion:
    """The recursion kernel K_a in the z1-pole basis.

    terms[m] = (t^(m-1) - sigma^(m-1)) * R with R = -(1/2)/[(y - y o s) x'];
    R has valuation exactly -2, so terms[2] has leading exponent -1.
    """
    loc = a.location if isinstance(a, BranchPointData) else a
    _s, sigma, _sp, big_r = _involution_pieces(c, loc, trunc)
    if jmax is None:
        jmax = trunc - 1
    terms = {}
    for j in range(1, jmax + 1):
        tj = _exact_power_series(loc, j, qq(1), sigma.trunc + j)
        terms[j + 1] = (tj - sigma.pow(j)) * big_r
    return KernelExpansion(loc, terms)


def _static_val(enc, a: Point) -> int:
    """Valuation of the series an encoding denotes, known without building it."""
    if enc is None:
        return 0
    tag = enc[0]
    if tag == "z" or tag == "s":
        return -enc[2] if enc[1] == a else 0
    if tag == "zsp" or tag == "ssp":
        return enc[1]
    if tag == "w02":
        return -2
    raise ValueError(f"unknown encoding {enc!r}")


class _Frame:
    """Per-branchpoint series workspace at one fixed working truncation."""

    def __init__(self, curve: SpectralCurve, location: Point, trunc: int):
        self.a = location
        self.trunc = trunc
        s, sigma, sigma_prime, big_r = _involution_pieces(curve, location, trunc)
        self.involution = s
        self.sigma = sigma
        self.sigma_prime = sigma_prime
        self.R = big_r
        self._sigma_pows = [None, sigma]
        self._zpows: dict = {}
        self._spows: dict = {}
        self._series: dict = {}
        self._rows: dict = {}

    def sigma_pow(self, j: int) -> LaurentSeries:
        while len(self._sigma_pows) <= j:
            self._sigma_pows.append(self._sigma_pows[-1] * self.sigma)
        return self._sigma_pows[j]

    def _pole_power_z(self, b: Point, k: int) -> LaurentSeries:
        """Expansion of 1/(z-b)^k in t = z - a."""
        if b == self.a:
            return _exact_power_series(self.a, -k, qq(1), self.trunc)
        pows = self._zpows.get(b)
        if pows is None:
            u = self.a.value - b.value
            base = make_series(self.a, 0,
                               [u, qq(1)] + [QQ0] * (self.trunc - 2),
                               self.trunc).recip()
            pows = [None, base]
            self._zpows[b] = pows
        while len(pows) <= k:
            pows.append(pows[-1] * pows[1])
        return pows[k]

    def _pole_power_s(self, b: Point, k: int) -> LaurentSeries:
        """Expansion of 1/(s(z)-b)^k in t = z - a."""
        pows = self._spows.get(b)
        if pows is None:
            if b == self.a:
                base = self.sigma.recip()
            else:
                base = self.sigma.add_scalar(self.a.value - b.value).recip()
            pows = [None, base]
            self._spows[b] = pows
        while len(pows) <= k:
            pows.append(pows[-1] * pows[1])
        return pows[k]

    def local_series(self, enc) -> LaurentSeries:
        """Series for an encoding; s-side encodings include the ds/dz factor."""
        got = self._series.get(enc)
        if got is not None:
            return got
        tag = enc[0]
        if tag == "z":
            out = self._pole_power_z(enc[1], enc[2])
        elif tag == "zsp":
            mm = enc[1]
            out = _exact_power_series(self.a, mm, qq(mm + 1), self.trunc)
        elif tag == "s":
            out = self._pole_power_s(enc[1], enc[2]) * self.sigma_prime
        elif tag == "ssp":
            mm = enc[1]
            out = self.sigma_pow(mm).scale(qq(mm + 1)) * self.sigma_prime if mm \
                else self.sigma_prime
        elif tag == "w02":
            t_minus_sigma = _exact_power_series(self.a, 1, qq(1), self.sigma.trunc) \
                - self.sigma
            out = t_minus_sigma.recip().pow(2) * self.sigma_prime
        else:
            raise ValueError(f"unknown encoding {enc!r}")
        self._series[enc] = out
        return out

    def row(self, zenc, senc) -> list:
        """Residues row[j] = Res_t (t^j - sigma^j) * R * G for the pair.

        G is the product of the two encoded series; row j corresponds to the
        basis order j+1 on slot 1.  Rows are computed once per pair and
        reused across the whole level (and across levels at this truncation).
        """
        key = (zenc, senc)
        got = self._rows.get(key)
        if got is not None:
            return got
        jmax = 1 - (_static_val(zenc, self.a) + _static_val(senc, self.a))
        if jmax < 1:
            self._rows[key] = []
            return []
        g_series = self.local_series(senc)
        if zenc is not None:
            g_series = self.local_series(zenc) * g_series
        g_series = g_series.capped(2)
        # coefficients of R*G at the exponents the residues read
        rw = {}
        for e_out in range(-1 - jmax, 0):
            acc = QQ0
            for idx, gc in enumerate(g_series.coeffs):
                if gc == 0:
                    continue
                i = e_out - (g_series.min_exp + idx)
                if i < -2:
                    continue
                rc = self.R.coefficient(i)
                if rc != 0:
                    acc += gc * rc
            rw[e_out] = acc
        out = [QQ0] * (jmax + 1)
        for j in range(1, jmax + 1):
            acc = rw[-1 - j]
            sp = self.sigma_pow(j)
            for m in range(j, jmax + 1):
                sc = sp.coefficient(m)
                if sc != 0:
                    acc -= sc * rw[-1 - m]
            out[j] = acc
        self._rows[key] = out
        return out


class TruncationInstabilityError(ArithmeticError):
    """Recomputing at a deeper truncation changed a coefficient."""


def _enc_z(elem: BasisElem):
    return ("z", elem.branchpoint, elem.order)


def _enc_s(elem: BasisElem):
    return ("s", elem.branchpoint, elem.order)


class RecursionSession:
    """Memoized correlator computation for one spectral curve.

    The memo table keyed by (g, n) is the only mutable state; entries are
    published complete, and the per-branchpoint residue assemblies within a
    level are independent of each other (run here on a single thread).
    """

    def __init__(self, curve: SpectralCurve, guard: int = 8,
                 stability: bool = True):
        self.curve = curve
        self.branch_data = branchpoints(curve)
        self.locations = tuple(b.location for b in self.branch_data)
        self.guard = guard
        self.stability = stability
        self._memo: dict = {}
        self._frames: dict = {}
        self.level_info: dict = {}

    # -- frames ------------------------------------------------------------

    def frame(self, location: Point, trunc: int) -> _Frame:
        key = (location, trunc)
        fr = self._frames.get(key)
        if fr is None:
            fr = _Frame(self.curve, location, trunc)
            self._frames[key] = fr
        return fr

    def deepest_frame(self, location: Point) -> _Frame:
        best = -1
        for loc, t in self._frames:
            if loc == location and t > best:
                best = t
        if best < 0:
            return self.frame(location, 4 + self.guard)
        return self.frame(location, best)

    # -- correlators ---------------------------------------------------------

    def correlator(self, g: int, n: int) -> Correlator:
        if g < 0 or n < 1 or 2 * g - 2 + n <= 0:
            raise ValueError(f"omega_({g},{n}) is outside the stable range")
        key = (g, n)
        got = self._memo.get(key)
        if got is not None:
            return got
        for dep in self._dependencies(g, n):
            self.correlator(*dep)
        if not self.branch_data:
            corr = Correlator(g, n, {})
            self._memo[key] = corr
            self.level_info[key] = {"trunc": None, "stability": "empty",
                                    "support": 0, "max_order": 0}
            return corr
        drop = self._max_drop(g, n)
        trunc = drop + self.guard
        coeffs = self._assemble(g, n, trunc)
        stability = "unchecked"
        if self.stability:
            deeper = self._assemble(g, n, trunc + 2)
            if deeper != coeffs:
                raise TruncationInstabilityError(
                    f"omega_({g},{n}) changed between truncations "
                    f"{trunc} and {trunc + 2}")
            stability = "recomputed+2"
        bound = max_basis_order(g, n)
        for tup in coeffs:
            for e in tup:
                if e.order > bound:
                    raise ArithmeticError(
                        f"omega_({g},{n}) produced basis order {e.order} "
                        f"above the bound {bound}")
        corr = Correlator(g, n, coeffs)
        self._memo[key] = corr
        self.level_info[key] = {
            "trunc": trunc,
            "stability": stability,
            "support": corr.support_size(),
            "max_order": corr.max_order(),
        }
        return corr

    def _splittings(self, g: int, n: int):
        """Allowed (h, I) with I a subset of spectator positions 1..n-1.

        Yields (h, I, I2); the excluded terms are (0, empty) and (g, all).
        """
        positions = tuple(range(1, n))
        for h in range(g + 1):
            for mask in range(1 << len(positions)):
                chosen = tuple(p for i, p in enumerate(positions) if mask >> i & 1)
                if h == 0 and not chosen:
                    continue
                if h == g and len(chosen) == len(positions):
                    continue
                rest = tuple(p for p in positions if p not in chosen)
                yield h, chosen, rest

    def _dependencies(self, g: int, n: int):
        deps = set()
        if g >= 1 and (g - 1, n + 1) != (0, 2):
            deps.add((g - 1, n + 1))
        for h, chosen, rest in self._splittings(g, n):
            for lvl in ((h, 1 + len(chosen)), (g - h, 1 + len(rest))):
                if lvl != (0, 2) and 2 * lvl[0] - 2 + lvl[1] > 0:
                    deps.add(lvl)
        return sorted(deps, key=lambda p: (2 * p[0] - 2 + p[1], p[0]))

    def _slot0_max(self, level, a: Point) -> int:
        """Largest at-a order in slot 0 across the level's support."""
        corr = self._memo[level]
        best = 0
        for tup in corr.coeffs:
            e = tup[0]
            if e.branchpoint == a and e.order > best:
                best = e.order
        return best

    def _max_drop(self, g: int, n: int) -> int:
        """Worst pole order of the bracket over all branchpoints."""
        worst = 2
        for a in self.locations:
            local = 0
            if g >= 1:
                if (g - 1, n + 1) == (0, 2):
                    local = max(local, 2)
                else:
                    sub = self._memo[(g - 1, n + 1)]
                    for tup in sub.coeffs:
                        d = sum(e.order for e in tup[:2] if e.branchpoint == a)
                        if d > local:
                            local = d
            for h, chosen, rest in self._splittings(g, n):
                lvl1 = (h, 1 + len(chosen))
                lvl2 = (g - h, 1 + len(rest))
                a1 = 0 if lvl1 == (0, 2) else self._slot0_max(lvl1, a)
                a2 = 0 if lvl2 == (0, 2) else self._slot0_max(lvl2, a)
                if a1 + a2 > local:
                    local = a1 + a2
            if local > worst:
                worst = local
        return worst

    def _assemble(self, g: int, n: int, trunc: int) -> dict:
        out: dict = {}
        for a in self.locations:
            self._accumulate(self.frame(a, trunc), g, n, out)
        return {k: v for k, v in out.items() if v != 0}

    def _accumulate(self, fr: _Frame, g: int, n: int, out: dict):
        a = fr.a

        def add(j: int, spect: tuple, val):
            key = (BasisElem(a, j + 1),) + spect
            prev = out.get(key)
            out[key] = val if prev is None else prev + val

        # bracket part 1: the (g-1, n+1) term with slots 0,1 at z, s(z)
        if g >= 1:
            if (g - 1, n + 1) == (0, 2):
                row = fr.row(None, ("w02",))
                for j in range(1, len(row)):
                    if row[j] != 0:
                        add(j, (), row[j])
            else:
                sub = self._memo[(g - 1, n + 1)]
                for tup, c in sub.coeffs.items():
                    row = fr.row(_enc_z(tup[0]), _enc_s(tup[1]))
                    spect = tup[2:]
                    for j in range(1, len(row)):
                        if row[j] != 0:
                            add(j, spect, c * row[j])

        # bracket part 2: products over stable/unstable splittings
        for h, chosen, rest in self._splittings(g, n):
            lvl1 = (h, 1 + len(chosen))
            lvl2 = (g - h, 1 + len(rest))
            sp1 = lvl1 == (0, 2)
            sp2 = lvl2 == (0, 2)

            def merge(r1: tuple, r2: tuple) -> tuple:
                spect = [None] * (n - 1)
                for pos, e in zip(chosen, r1):
                    spect[pos - 1] = e
                for pos, e in zip(rest, r2):
                    spect[pos - 1] = e
                return tuple(spect)

            if sp1 and sp2:
                row = fr.row(("zsp", 0), ("ssp", 0))
                for j in range(1, len(row)):
                    if row[j] != 0:
                        add(j, merge((BasisElem(a, 2),), (BasisElem(a, 2),)),
                            row[j])
            elif sp1:
                corr2 = self._memo[lvl2]
                for tup2, c2 in corr2.coeffs.items():
                    senc = _enc_s(tup2[0])
                    cap = -_static_val(senc, a)
                    for mm in range(0, cap + 1):
                        row = fr.row(("zsp", mm), senc)
                        if not row:
                            continue
                        spect = merge((BasisElem(a, mm + 2),), tup2[1:])
                        for j in range(1, len(row)):
                            if row[j] != 0:
                                add(j, spect, c2 * row[j])
            elif sp2:
                corr1 = self._memo[lvl1]
                for tup1, c1 in corr1.coeffs.items():
                    zenc = _enc_z(tup1[0])
                    cap = -_static_val(zenc, a)
                    for mm in range(0, cap + 1):
                        row = fr.row(zenc, ("ssp", mm))
                        if not row:
                            continue
                        spect = merge(tup1[1:], (BasisElem(a, mm + 2),))
                        for j in range(1, len(row)):
                            if row[j] != 0:
                                add(j, spect, c1 * row[j])
            else:
                corr1 = self._memo[lvl1]
                corr2 = self._memo[lvl2]
                for tup1, c1 in corr1.coeffs.items():
                    zenc = _enc_z(tup1[0])
                    r1 = tup1[1:]
                    for tup2, c2 in corr2.coeffs.items():
                        row = fr.row(zenc, _enc_s(tup2[0]))
                        if not row:
                            continue
                        cc = c1 * c2
                        spect = merge(r1, tup2[1:])
                        for j in range(1, len(row)):
                            if row[j] != 0:
                                add(j, spect, cc * row[j])

    # -- evaluation helpers ---------------------------------------------------

    def local_expansion(self, g: int, location: Point) -> LaurentSeries:
        """Series of the one-point correlator's dz-coefficient at a branchpoint."""
        corr = self.correlator(g, 1)
        fr = self.deepest_frame(location)
        acc = zero_series(location, fr.trunc)
        for (e,), c in corr.coeffs.items():
            acc = acc + fr.local_series(_enc_z(e)).scale(c)
        return acc


def omega(c, g: int, n: int) -> Correlator:
    """Correlator of a curve or an existing session (sessions memoize)."""
    session = c if isinstance(c, RecursionSession) else RecursionSession(c)
    return session.correlator(g, n)


def correlator_to_ratfun(corr: Correlator) -> RatFun:
    """One-slot correlator as a global rational function (dz-coefficient)."""
    if corr.n != 1:
        raise ValueError("only one-slot correlators convert to a single RatFun")
    total = RatFun.of([0])
    for (e,), c in corr.coeffs.items():
        den = Poly.of([-e.branchpoint.value, 1]) ** e.order
        total = total + RatFun.make(Poly.of([c]), den)
    return total


class PoleEvaluationError(ValueError):
    """A correlator was evaluated at one of its own pole locations."""


def _basis_value(e: BasisElem, p: Point):
    if p.is_infinity:
        return QQ0
    if p == e.branchpoint:
        raise PoleEvaluationError(f"evaluation at the branchpoint {p}")
    return 1 / (p.value - e.branchpoint.value) ** e.order


def correlator_eval(corr: Correlator, assignment):
    """Substitute points into all slots (None marks at most one free slot).

    With a free slot the result is the RatFun dz-coefficient in that slot;
    with none it is a Scalar.
    """
    assignment = list(assignment)
    if len(assignment) != corr.n:
        raise ValueError("assignment length must match the slot count")
    free = [i for i, p in enumerate(assignment) if p is None]
    if len(free) > 1:
        raise ValueError("at most one free slot is supported")
    if not free:
        total = QQ0
        for tup, c in corr.coeffs.items():
            v = c
            for e, p in zip(tup, assignment):
                v *= _basis_value(e, p)
            total += v
        return total
    slot = free[0]
    partial: dict[BasisElem, Scalar] = {}
    for tup, c in corr.coeffs.items():
        v = c
        for i, (e, p) in enumerate(zip(tup, assignment)):
            if i != slot:
                v *= _basis_value(e, p)
        if v != 0:
            partial[tup[slot]] = partial.get(tup[slot], QQ0) + v
    total = RatFun.of([0])
    for e, c in partial.items():
        den = Poly.of([-e.branchpoint.value, 1]) ** e.order
        total = total + RatFun.make(Poly.of([c]), den)
    return total

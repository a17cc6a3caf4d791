"""Exact function theory on marked projective lines over the rationals.

Rational functions are quotients of coprime polynomials with Fraction
coefficients; the point at infinity is handled through the substitution
``x -> 1/x``, so vanishing orders and Laurent coefficients are exact
everywhere.  Function spaces carry an explicit twist divisor D and a basis of
sections of O(D); vanishing conditions cut subspaces out by exact kernel
computations on local Taylor coefficients.

The base field is Q rather than an algebraically closed field: every check
performed here is linear-algebraic and field-agnostic, and "generic" choices
are drawn deterministically from a pool of primes instead of randomly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from . import linalg


class FunctionError(ValueError):
    """Raised for malformed rational functions, points or function spaces."""


class SectionError(FunctionError):
    """Raised when a function is not a section of the stated line bundle."""


class GenericityError(FunctionError):
    """Raised when no pool constant satisfies the requested predicates."""


# -- polynomials ---------------------------------------------------------------

class Poly:
    """Dense univariate polynomial over Q, coefficients low to high."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Fraction | int] = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @staticmethod
    def const(c) -> "Poly":
        return Poly([Fraction(c)])

    @staticmethod
    def x() -> "Poly":
        return Poly([0, 1])

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other: "Poly") -> "Poly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return Poly([c + (b[i] if i < len(b) else 0) for i, c in enumerate(a)])

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    def scale(self, c: Fraction) -> "Poly":
        return Poly([c * a for a in self.coeffs])

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        den = other.coeffs
        q = [Fraction(0)] * max(0, len(rem) - len(den) + 1)
        for i in range(len(rem) - len(den), -1, -1):
            f = rem[i + len(den) - 1] / den[-1]
            if f != 0:
                q[i] = f
                for j, d in enumerate(den):
                    rem[i + j] -= f * d
        return Poly(q), Poly(rem)

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        if a.is_zero():
            return a
        return a.scale(1 / a.coeffs[-1])  # monic

    def eval(self, x: Fraction) -> Fraction:
        out = Fraction(0)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def reversed(self, at_degree: int | None = None) -> "Poly":
        """x^d * p(1/x) where d defaults to deg(p)."""
        d = self.degree() if at_degree is None else at_degree
        if d < self.degree():
            raise FunctionError("cannot reverse below the degree")
        cs = list(self.coeffs) + [Fraction(0)] * (d + 1 - len(self.coeffs))
        return Poly(list(reversed(cs)))

    def valuation_at(self, point: Fraction) -> int:
        """Multiplicity of ``point`` as a root (0 when not a root)."""
        if self.is_zero():
            raise FunctionError("valuation of the zero polynomial")
        k = 0
        p = self
        lin = Poly([-point, 1])
        while True:
            q, r = p.divmod(lin)
            if not r.is_zero():
                return k
            k += 1
            p = q

    def shifted_coeffs(self, point: Fraction, upto: int) -> list[Fraction]:
        """First ``upto`` Taylor coefficients at ``point``."""
        rem = self
        lin = Poly([-point, 1])
        out = []
        for _ in range(upto):
            q, r = rem.divmod(lin)
            out.append(r.coeffs[0] if r.coeffs else Fraction(0))
            rem = q
        return out


# -- points --------------------------------------------------------------------

class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INF = _Infinity()
Point = Fraction | _Infinity


def point_key(p: Point):
    return (1, Fraction(0)) if p is INF else (0, p)


def parse_point(s: str) -> Point:
    s = s.strip()
    if s in ("inf", "oo", "infinity"):
        return INF
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise FunctionError(f"bad point literal {s!r}") from exc


def format_point(p: Point) -> str:
    if p is INF:
        return "inf"
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


# -- rational functions ---------------------------------------------------------

class RationalFunction:
    """Quotient of coprime polynomials, denominator monic and nonzero."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly = Poly([1])):
        if den.is_zero():
            raise FunctionError("zero denominator")
        if not num.is_zero():
            g = num.gcd(den)
            if g.degree() > 0:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        lead = den.coeffs[-1]
        self.num = num.scale(1 / lead)
        self.den = den.scale(1 / lead)
        if num.is_zero():
            self.den = Poly([1])
            self.num = Poly()

    @staticmethod
    def const(c) -> "RationalFunction":
        return RationalFunction(Poly.const(c))

    @staticmethod
    def x() -> "RationalFunction":
        return RationalFunction(Poly.x())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.degree() <= 0 and self.den.degree() == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalFunction)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self + (-other)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        if other.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def scale(self, c: Fraction) -> "RationalFunction":
        return RationalFunction(self.num.scale(Fraction(c)), self.den)

    def ord_at(self, p: Point) -> int:
        """Vanishing order at ``p`` (negative at poles); the zero function is refused."""
        if self.is_zero():
            raise FunctionError("the zero function has no vanishing order")
        if p is INF:
            return self.den.degree() - self.num.degree()
        return self.num.valuation_at(p) - self.den.valuation_at(p)

    def value_at(self, p: Point) -> Fraction:
        """Exact value at a point where the function has neither zero nor pole
        constraints; equals the order-0 Laurent coefficient."""
        return self.laurent_coeff(p, 0)

    def _local_parts(self, p: Point) -> tuple[int, Poly, Poly]:
        """(valuation, unit numerator, unit denominator) in the local coordinate."""
        if self.is_zero():
            raise FunctionError("the zero function has no Laurent expansion")
        if p is INF:
            dn, dd = self.num.degree(), self.den.degree()
            num = self.num.reversed()
            den = self.den.reversed()
            return dd - dn, num, den
        num = Poly(self.num.shifted_coeffs(p, self.num.degree() + 1))
        den = Poly(self.den.shifted_coeffs(p, self.den.degree() + 1))
        a = next(i for i, c in enumerate(num.coeffs) if c != 0)
        b = next(i for i, c in enumerate(den.coeffs) if c != 0)
        return a - b, Poly(num.coeffs[a:]), Poly(den.coeffs[b:])

    def laurent_coeff(self, p: Point, order: int) -> Fraction:
        """Coefficient of t^order in the Laurent expansion at ``p``."""
        if self.is_zero():
            return Fraction(0)
        val, num, den = self._local_parts(p)
        k = order - val
        if k < 0:
            return Fraction(0)
        # power series division num/den up to t^k
        c: list[Fraction] = []
        for i in range(k + 1):
            acc = num.coeffs[i] if i < len(num.coeffs) else Fraction(0)
            for j in range(i):
                dcoef = den.coeffs[i - j] if i - j < len(den.coeffs) else Fraction(0)
                acc -= c[j] * dcoef
            c.append(acc / den.coeffs[0])
        return c[k]

    def __repr__(self):
        return f"RationalFunction({format_function(self)!r})"


# -- string form ----------------------------------------------------------------

def _poly_to_str(p: Poly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for k in range(p.degree(), -1, -1):
        c = p.coeffs[k]
        if c == 0:
            continue
        mag = abs(c)
        if k == 0:
            body = _frac_str(mag)
        else:
            xpow = "x" if k == 1 else f"x^{k}"
            body = xpow if mag == 1 else f"{_frac_str(mag)}*{xpow}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts)


def _frac_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_function(f: RationalFunction) -> str:
    if f.den.degree() == 0 and f.den.coeffs == (Fraction(1),):
        return _poly_to_str(f.num)
    return f"({_poly_to_str(f.num)})/({_poly_to_str(f.den)})"


def parse_function(text: str) -> RationalFunction:
    """Parse expressions over the variable ``x`` with + - * / ^ and rationals."""
    import ast

    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise FunctionError(f"cannot parse function {text!r}: {exc}") from exc

    def walk(node) -> RationalFunction:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                base = walk(node.left)
                if not (isinstance(node.right, ast.Constant) or
                        (isinstance(node.right, ast.UnaryOp) and isinstance(node.right.op, ast.USub))):
                    raise FunctionError("exponents must be integer literals")
                exp_node = node.right
                neg = False
                if isinstance(exp_node, ast.UnaryOp):
                    neg = True
                    exp_node = exp_node.operand
                if not isinstance(exp_node, ast.Constant) or not isinstance(exp_node.value, int):
                    raise FunctionError("exponents must be integer literals")
                e = exp_node.value
                out = RationalFunction.const(1)
                for _ in range(e):
                    out = out * base
                return RationalFunction.const(1) / out if neg else out
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            raise FunctionError(f"unsupported operator in {text!r}")
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -walk(node.operand)
            if isinstance(node.op, ast.UAdd):
                return walk(node.operand)
            raise FunctionError(f"unsupported unary operator in {text!r}")
        if isinstance(node, ast.Name):
            if node.id == "x":
                return RationalFunction.x()
            raise FunctionError(f"unknown symbol {node.id!r}; the variable is 'x'")
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return RationalFunction.const(node.value)
        raise FunctionError(f"unsupported syntax in {text!r}")

    return walk(tree)


# -- divisors on the line --------------------------------------------------------

@dataclass(frozen=True)
class PointDivisor:
    """Finitely supported integer divisor on the projective line."""

    coeffs: Mapping[Point, int]

    def __post_init__(self):
        cleaned = {
            p: int(c)
            for p, c in sorted(self.coeffs.items(), key=lambda kv: point_key(kv[0]))
            if c != 0
        }
        object.__setattr__(self, "coeffs", cleaned)

    def degree(self) -> int:
        return sum(self.coeffs.values())

    def get(self, p: Point) -> int:
        return self.coeffs.get(p, 0)

    def is_effective(self) -> bool:
        return all(c >= 0 for c in self.coeffs.values())

    def add(self, other: "PointDivisor") -> "PointDivisor":
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0) + c
        return PointDivisor(out)

    def sub(self, other: "PointDivisor") -> "PointDivisor":
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0) - c
        return PointDivisor(out)

    def geq(self, other: "PointDivisor") -> bool:
        return self.sub(other).is_effective()

    def support(self) -> tuple[Point, ...]:
        return tuple(self.coeffs)


def divisor_of(f: RationalFunction, known: Iterable[Point] = ()) -> PointDivisor:
    """div(f) as a point divisor; all zeros and poles must be rational.

    ``known`` points are checked first; any leftover irreducible factor of
    degree >= 2 means the divisor is not supported on rational points and is
    rejected (the base field here is Q by design).
    """
    if f.is_zero():
        raise FunctionError("div of the zero function")
    out: dict[Point, int] = {}
    num, den = f.num, f.den
    for p in known:
        if p is INF:
            continue
        v = f.ord_at(p)
        if v:
            out[p] = v
    num = _strip_roots(num, [p for p in out if out[p] > 0], out)
    den = _strip_roots(den, [p for p in out if out[p] < 0], {p: -c for p, c in out.items()})
    for poly, sign in ((num, 1), (den, -1)):
        for root, mult in _rational_roots(poly):
            out[root] = out.get(root, 0) + sign * mult
    o_inf = f.ord_at(INF)
    if o_inf:
        out[INF] = o_inf
    D = PointDivisor(out)
    if D.degree() != 0:
        raise FunctionError(
            "function has zeros or poles outside the rational points; "
            "only Q-rational support is handled"
        )
    return D


def _strip_roots(p: Poly, points: Iterable[Point], mults: Mapping[Point, int]) -> Poly:
    for pt in points:
        if pt is INF:
            continue
        for _ in range(abs(mults[pt])):
            q, r = p.divmod(Poly([-pt, 1]))
            if not r.is_zero():
                break
            p = q
    return p


def _rational_roots(p: Poly) -> list[tuple[Fraction, int]]:
    """All rational roots with multiplicities, by the rational root test."""
    out = []
    if p.is_zero() or p.degree() == 0:
        return out
    v0 = p.valuation_at(Fraction(0))
    if v0:
        out.append((Fraction(0), v0))
        for _ in range(v0):
            p = p.divmod(Poly([0, 1]))[0]
    if p.degree() == 0:
        return out
    from math import lcm

    scale = lcm(*(c.denominator for c in p.coeffs))
    ints = [int(c * scale) for c in p.coeffs]
    a0, an = abs(ints[0]), abs(ints[-1])

    def divisors(n: int) -> list[int]:
        ds = [d for d in range(1, int(n**0.5) + 1) if n % d == 0]
        return sorted(set(ds + [n // d for d in ds]))

    for pnum in divisors(a0):
        for qden in divisors(an):
            for cand in (Fraction(pnum, qden), Fraction(-pnum, qden)):
                m = p.valuation_at(cand)
                if m:
                    out.append((cand, m))
                    for _ in range(m):
                        p = p.divmod(Poly([-cand, 1]))[0]
                    if p.degree() == 0:
                        return out
    return out


def ord0_at(f: RationalFunction, D: PointDivisor, p: Point) -> int:
    """ord^0_P(f) = ord_P(f) + ord_P(D) for a section f of O(D)."""
    return f.ord_at(p) + D.get(p)


def div0(f: RationalFunction, D: PointDivisor) -> PointDivisor:
    """div(f) + D, verified effective of degree deg D."""
    if f.is_zero():
        raise SectionError("the zero function is not a section")
    full = divisor_of(f, known=D.support()).add(D)
    if not full.is_effective():
        bad = [format_point(p) for p, c in full.coeffs.items() if c < 0]
        raise SectionError(f"not a section: div(f)+D is negative at {', '.join(bad)}")
    return full


# -- marked components -----------------------------------------------------------

@dataclass(frozen=True)
class MarkedComponent:
    """A projective line attached at a vertex, with one marked point per
    incident edge plus optional named extra points; all points distinct."""

    vertex: str
    marked: Mapping[str, Point]
    extra: Mapping[str, Point] = None

    def __post_init__(self):
        object.__setattr__(self, "marked", dict(self.marked))
        object.__setattr__(self, "extra", dict(self.extra or {}))
        pts = list(self.marked.values()) + list(self.extra.values())
        keys = [point_key(p) for p in pts]
        if len(set(keys)) != len(keys):
            raise FunctionError(f"marked points on component {self.vertex!r} are not distinct")

    def point(self, edge_id: str) -> Point:
        try:
            return self.marked[edge_id]
        except KeyError:
            raise FunctionError(
                f"component {self.vertex!r} has no marked point for edge {edge_id!r}"
            ) from None

    def all_points(self) -> tuple[Point, ...]:
        return tuple(self.marked.values()) + tuple(self.extra.values())


# -- function spaces ---------------------------------------------------------------

def _coefficient_matrix(basis: Sequence[RationalFunction]) -> list[list[Fraction]]:
    """Numerator coefficient rows over the common (lcm) denominator."""
    common = Poly([1])
    for f in basis:
        g = common.gcd(f.den)
        common = common.divmod(g)[0] * f.den
    nums = [f.num * common.divmod(f.den)[0] for f in basis]
    width = max((p.degree() + 1 for p in nums), default=0)
    return [
        [p.coeffs[i] if i < len(p.coeffs) else Fraction(0) for i in range(width)]
        for p in nums
    ]


def independent(basis: Sequence[RationalFunction]) -> bool:
    rows = _coefficient_matrix(basis)
    return linalg.rank(rows) == len(basis)


def same_span(a: Sequence[RationalFunction], b: Sequence[RationalFunction]) -> bool:
    """Exact equality of the spanned subspaces of Q(x)."""
    both = list(a) + list(b)
    rows = _coefficient_matrix(both)
    ra = linalg.rank(rows[: len(a)])
    rb = linalg.rank(rows[len(a):])
    return ra == rb == linalg.rank(rows)


@dataclass(frozen=True)
class FunctionSpace:
    """A basis of sections of O(D) for an explicit twist divisor D."""

    basis: tuple[RationalFunction, ...]
    divisor: PointDivisor

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        for f in self.basis:
            div0(f, self.divisor)  # raises SectionError when invalid
        if not independent(self.basis):
            raise FunctionError("basis is linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def element(self, coords: Sequence[Fraction]) -> RationalFunction:
        out = RationalFunction(Poly())
        for c, f in zip(coords, self.basis):
            if c != 0:
                out = out + f.scale(c)
        return out


def subspace_with_vanishing(V: FunctionSpace, required: PointDivisor) -> FunctionSpace:
    """The subspace of sections s with div0(s) >= required.

    Exact kernel computation: at each constrained point the first Laurent
    coefficients of a section (starting at order -ord_P(D)) must vanish.
    """
    if not required.is_effective():
        raise FunctionError("vanishing requirement must be effective")
    rows: list[list[Fraction]] = []
    for p, m in required.coeffs.items():
        start = -V.divisor.get(p)
        for order in range(start, start + m):
            rows.append([f.laurent_coeff(p, order) for f in V.basis])
    kernel = linalg.nullspace(rows, ncols=V.dim)
    return FunctionSpace(tuple(V.element(vec) for vec in kernel), V.divisor)


def leading_coeff_map(
    V: FunctionSpace, at: PointDivisor, points: Sequence[Point]
) -> list[list[Fraction]]:
    """Rows of leading Taylor coefficients: one row per basis section, one
    column per increment point, taken at order ord_P(at).

    The row space is well defined up to coordinate-wise scaling; its kernel
    consists of the sections vanishing one order deeper at every point.
    """
    return [
        [f.laurent_coeff(p, at.get(p) - V.divisor.get(p)) for p in points]
        for f in V.basis
    ]


# -- deterministic generic constants ----------------------------------------------

SEED_POOL_ENV = "TROPLIFT_SEED_POOL"


def _primes():
    known: list[int] = []
    n = 2
    while True:
        if all(n % p for p in known):
            known.append(n)
            yield n
        n += 1


class ConstantPool:
    """Deterministic source of fresh rational constants.

    Values come from the prime sequence 2, 3, 5, ... skipping anything in
    ``avoid`` and anything already drawn.  The environment variable
    TROPLIFT_SEED_POOL (comma-separated integers) overrides the leading
    values, for robustness testing only.
    """

    def __init__(self, avoid: Iterable[Point] = ()):  # noqa: D401
        self._avoid = {point_key(Fraction(p)) for p in avoid if p is not INF}
        self._override: list[Fraction] = []
        raw = os.environ.get(SEED_POOL_ENV, "")
        if raw.strip():
            try:
                self._override = [Fraction(tok.strip()) for tok in raw.split(",") if tok.strip()]
            except (ValueError, ZeroDivisionError) as exc:
                raise FunctionError(f"bad {SEED_POOL_ENV} value {raw!r}") from exc
        self._primes = _primes()

    def draw(self) -> Fraction:
        while True:
            value = self._override.pop(0) if self._override else Fraction(next(self._primes))
            key = point_key(value)
            if key not in self._avoid:
                self._avoid.add(key)
                return value

    def reserve(self, points: Iterable[Point]) -> None:
        for p in points:
            if p is not INF:
                self._avoid.add(point_key(p))


Predicate = Callable[[RationalFunction], bool]


def distinct_values_at(points: Sequence[Point]) -> Predicate:
    def check(f: RationalFunction) -> bool:
        vals = [f.laurent_coeff(p, 0) for p in points]
        return len(set(vals)) == len(vals)

    return check


def nonconstant() -> Predicate:
    return lambda f: not f.is_constant()


def construct_function(
    orders: Mapping[Point, int],
    predicates: Sequence[Predicate] = (),
    pool: ConstantPool | None = None,
    extend: bool = True,
    max_attempts: int = 64,
) -> RationalFunction:
    """A rational function with exactly the prescribed vanishing orders at the
    listed points, satisfying every predicate.

    Free zeros/poles at fresh pool constants balance the order at infinity
    when it is prescribed; with ``extend`` the search may also introduce
    fresh zero/pole pairs to satisfy predicates.  Choices are deterministic;
    raises GenericityError when the attempt budget is exhausted and
    SectionError-level conflicts surface as FunctionError.
    """
    if len(orders) > 8:
        raise FunctionError("at most 8 constrained points are supported")
    pool = pool or ConstantPool()
    pool.reserve(orders.keys())
    finite = {p: o for p, o in orders.items() if p is not INF}
    base = RationalFunction(Poly([1]))
    for p, o in finite.items():
        lin = RationalFunction(Poly([-p, 1]))
        for _ in range(abs(o)):
            base = base * lin if o > 0 else base / lin
    deficit = 0
    if INF in orders:
        implied = -sum(finite.values())
        deficit = implied - orders[INF]
        # deficit > 0: add that many fresh zeros; < 0: fresh poles
    extra_pairs = 0
    for attempt in range(max_attempts):
        f = base
        for _ in range(abs(deficit)):
            lin = RationalFunction(Poly([-pool.draw(), 1]))
            f = f * lin if deficit > 0 else f / lin
        for _ in range(extra_pairs):
            f = f * RationalFunction(Poly([-pool.draw(), 1])) / RationalFunction(
                Poly([-pool.draw(), 1])
            )
        if all(pred(f) for pred in predicates):
            for p, o in orders.items():
                got = f.ord_at(p)
                if got != o:
                    raise FunctionError(
                        f"constructed order {got} != prescribed {o} at {format_point(p)}"
                    )
            return f
        if deficit == 0 and extra_pairs == 0:
            if not extend:
                raise GenericityError(
                    "predicates unsatisfied and no free constants available"
                )
            extra_pairs = 1
        elif extend and attempt % 8 == 7:
            extra_pairs += 1
    raise GenericityError(f"no admissible function after {max_attempts} attempts")

"""Monotone actions on the line, lifts of circle maps and translation numbers.

A lift is an increasing map f of the real line with f(x + 1) = f(x) + 1,
stored exactly: a rational rotation x -> x + p/q, or a piecewise-linear map
given by rational breakpoints (x_i, f(x_i)) with 0 = x_0 < ... < x_k < 1.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .qmcore import Verdict, frac_str
from .triple import (
    AxiomFailure,
    DisplacementCertificate,
    GActionOnTriple,
    HypothesisViolation,
    Triple,
    displacement_certificate,
)
from .words import DomainError, Presentation, Word

DEFAULT_MAX_PERIOD = 10**4
DEFAULT_MAX_EXACT_Q = 64
_MAX_DENOMINATOR_BITS = 512


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class CircleLift:
    kind: str  # "rotation" | "pl"
    angle: Fraction = Fraction(0)
    xs: tuple[Fraction, ...] = ()
    ys: tuple[Fraction, ...] = ()

    @classmethod
    def rotation(cls, angle) -> "CircleLift":
        return cls("rotation", _frac(angle))

    @classmethod
    def pl(cls, breakpoints: Iterable[tuple]) -> "CircleLift":
        return from_graph([(_frac(x), _frac(y)) for x, y in breakpoints])

    def __call__(self, x) -> Fraction:
        x = _frac(x)
        if self.kind == "rotation":
            return x + self.angle
        n = math.floor(x)
        t = x - n
        i = bisect_right(self.xs, t) - 1
        x0, y0 = self.xs[i], self.ys[i]
        if i + 1 < len(self.xs):
            x1, y1 = self.xs[i + 1], self.ys[i + 1]
        else:
            x1, y1 = Fraction(1), self.ys[0] + 1
        return y0 + (t - x0) * (y1 - y0) / (x1 - x0) + n

    def graph(self) -> list[tuple[Fraction, Fraction]]:
        if self.kind == "rotation":
            return [(Fraction(0), self.angle)]
        return list(zip(self.xs, self.ys))

    def inverse(self) -> "CircleLift":
        if self.kind == "rotation":
            return CircleLift.rotation(-self.angle)
        return from_graph([(y, x) for x, y in self.graph()])

    def compose(self, other: "CircleLift") -> "CircleLift":
        """self o other."""
        if self.kind == "rotation" and other.kind == "rotation":
            return CircleLift.rotation(self.angle + other.angle)
        xs = {x for x, _ in other.graph()}
        if self.kind == "pl":
            ginv = other.inverse()
            lo = other(0)
            for b, _ in self.graph():
                m = math.ceil(lo - b)
                while b + m < lo + 1:
                    xs.add(ginv(b + m))
                    m += 1
        return from_graph([(x, self(other(x))) for x in xs])

    def __matmul__(self, other: "CircleLift") -> "CircleLift":
        return self.compose(other)

    def power(self, k: int) -> "CircleLift":
        if k < 0:
            return self.inverse().power(-k)
        result = CircleLift.rotation(0)
        base = self
        while k:
            if k & 1:
                result = base.compose(result)
            k >>= 1
            if k:
                base = base.compose(base)
        return result

    def to_json(self) -> dict:
        if self.kind == "rotation":
            return {"kind": "rotation", "angle": frac_str(self.angle)}
        return {"kind": "pl", "breakpoints": [[frac_str(x), frac_str(y)] for x, y in self.graph()]}

    @classmethod
    def from_config(cls, cfg: dict) -> "CircleLift":
        kind = cfg.get("kind")
        if kind == "rotation":
            return cls.rotation(Fraction(cfg["angle"]))
        if kind in ("pl", "table"):
            key = "breakpoints" if kind == "pl" else "points"
            return cls.pl([(Fraction(x), Fraction(y)) for x, y in cfg[key]])
        raise DomainError(f"unknown lift kind {kind!r}")


def from_graph(points: Sequence[tuple[Fraction, Fraction]]) -> CircleLift:
    """The PL lift through the given graph points (extended by f(x+1) = f(x)+1)."""
    if not points:
        raise DomainError("a lift needs at least one graph point")
    reduced: dict[Fraction, Fraction] = {}
    for u, v in points:
        n = math.floor(u)
        u, v = u - n, v - n
        if u in reduced and reduced[u] != v:
            raise DomainError(f"inconsistent graph values at {u}")
        reduced[u] = v
    pts = sorted(reduced.items())
    for (u0, v0), (u1, v1) in zip(pts, pts[1:]):
        if not v0 < v1:
            raise DomainError(f"graph is not increasing between {u0} and {u1}")
    if not pts[-1][1] < pts[0][1] + 1:
        raise DomainError("graph is not increasing across the period")
    if pts[0][0] != 0:
        (ul, vl), (uf, vf) = pts[-1], pts[0]
        ul, vl = ul - 1, vl - 1
        pts.insert(0, (Fraction(0), vl + (0 - ul) * (vf - vl) / (uf - ul)))
    # drop points where the slope does not change
    keep = [pts[0]]
    for i in range(1, len(pts)):
        u0, v0 = keep[-1]
        u1, v1 = pts[i]
        u2, v2 = pts[i + 1] if i + 1 < len(pts) else (pts[0][0] + 1, pts[0][1] + 1)
        if (v1 - v0) * (u2 - u1) != (v2 - v1) * (u1 - u0):
            keep.append(pts[i])
    if len(keep) == 1:
        # one breakpoint per period: slope one everywhere
        return CircleLift.rotation(keep[0][1])
    return CircleLift("pl", Fraction(0), tuple(u for u, _ in keep), tuple(v for _, v in keep))


@dataclass(frozen=True)
class TranslationNumber:
    value: Fraction
    error_bound: Fraction
    exact: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "tau": frac_str(self.value),
            "error_bound": frac_str(self.error_bound),
            "exact": self.exact,
            "note": self.note,
        }


def _cycle_rotation_number(f: CircleLift, x: Fraction, max_period: int) -> Fraction | None:
    seen = {}
    y = x
    for j in range(max_period + 1):
        r = y - math.floor(y)
        if r in seen:
            i, yi = seen[r]
            return (y - yi) / (j - i)
        if r.denominator.bit_length() > _MAX_DENOMINATOR_BITS:
            return None
        seen[r] = (j, y)
        y = f(y)
    return None


def _periodic_sign(f: CircleLift, p: int, q: int) -> int:
    """Sign of tau(f) - p/q, read off the exact PL map f^q - id - p.

    A zero of f^q(x) - x - p is a periodic point of type p/q, so tau = p/q;
    otherwise the sign of that function is constant and equals the answer.
    """
    F = f.power(q)
    vals = [F(x) - x - p for x, _ in F.graph()]
    if min(vals) > 0:
        return 1
    if max(vals) < 0:
        return -1
    return 0


def _stern_brocot(f: CircleLift, lo: Fraction, hi: Fraction, max_q: int) -> Fraction | None:
    """Search fractions with denominator <= max_q; [lo, hi] is known to hold tau."""

    def side(p: int, q: int) -> int:
        x = Fraction(p, q)
        if x < lo:
            return 1
        if x > hi:
            return -1
        return _periodic_sign(f, p, q)

    a = math.floor(lo)
    s = side(a, 1)
    while True:
        if s == 0:
            return Fraction(a)
        s = side(a + 1, 1)
        if s <= 0:
            break
        a += 1
    if s == 0:
        return Fraction(a + 1)
    b, c, d = 1, a + 1, 1
    while b + d <= max_q:
        p, q = a + c, b + d
        s = side(p, q)
        if s == 0:
            return Fraction(p, q)
        if s > 0:
            a, b = p, q
        else:
            c, d = p, q
    return None


def _iterate(f: CircleLift, n: int) -> Fraction:
    y = Fraction(0)
    for _ in range(n):
        y = f(y)
    return y / n


def translation_number(
    f: CircleLift,
    mode: str = "exact",
    n: int = 1024,
    max_period: int = DEFAULT_MAX_PERIOD,
    max_exact_q: int = DEFAULT_MAX_EXACT_Q,
) -> TranslationNumber:
    """Translation number of a lift.

    Iterative mode returns f^n(0)/n, which lies within 1/n of the answer.
    Exact mode returns p/q for rotations; for PL maps it first looks for a
    periodic breakpoint orbit (period <= max_period), then searches fractions
    with denominator <= max_exact_q inside the iterative window for a periodic
    point. If both fail it falls back to the iterative value and says so.
    """
    if mode not in ("exact", "iter"):
        raise DomainError(f"unknown mode {mode!r}")
    if n < 1:
        raise DomainError("n must be positive")
    if f.kind == "rotation":
        return TranslationNumber(f.angle, Fraction(0), True, "rotation")
    if mode == "exact":
        for x in f.xs:
            tau = _cycle_rotation_number(f, x, max_period)
            if tau is not None:
                return TranslationNumber(tau, Fraction(0), True, f"periodic orbit through breakpoint {frac_str(x)}")
    est = _iterate(f, n)
    if mode == "exact":
        tau = _stern_brocot(f, est - Fraction(1, n), est + Fraction(1, n), max_exact_q)
        if tau is not None:
            return TranslationNumber(tau, Fraction(0), True, "periodic point of f^q - p")
        note = f"no periodic orbit with denominator <= {max_exact_q}; iterative fallback"
        return TranslationNumber(est, Fraction(1, n), False, note)
    return TranslationNumber(est, Fraction(1, n), False, "iterative")


def tau_homogeneity_check(f: CircleLift, k: int, mode: str = "exact", n: int = 1024) -> Verdict:
    if k == 0:
        raise DomainError("k must be nonzero")
    a = translation_number(f, mode, n)
    b = translation_number(f.power(k), mode, n)
    observed = abs(b.value - k * a.value)
    allowed = b.error_bound + abs(k) * a.error_bound
    return Verdict(observed <= allowed, observed, allowed)


# --- densities and the path-integral level function ------------------------


@dataclass(frozen=True)
class Density:
    """A non-negative 1-periodic density: step (value on [x_i, x_{i+1})) or PL."""

    kind: str
    xs: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    _cumulative: tuple[Fraction, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("step", "pl"):
            raise DomainError(f"unknown density kind {self.kind!r}")
        if not self.xs or self.xs[0] != 0 or any(a >= b for a, b in zip(self.xs, self.xs[1:])) or self.xs[-1] >= 1:
            raise DomainError("density breakpoints must start at 0 and increase within [0,1)")
        if any(v < 0 for v in self.values):
            raise DomainError("density must be non-negative")
        cum = [Fraction(0)]
        for i in range(len(self.xs)):
            cum.append(cum[-1] + self._piece_integral(i, self._right(i)))
        object.__setattr__(self, "_cumulative", tuple(cum))

    @classmethod
    def constant(cls, c=1) -> "Density":
        return cls("step", (Fraction(0),), (Fraction(c),))

    @classmethod
    def from_config(cls, cfg: dict) -> "Density":
        kind = cfg.get("kind")
        if kind == "constant":
            return cls.constant(Fraction(cfg.get("value", 1)))
        key = "pieces" if kind == "step" else "points"
        pairs = [(Fraction(x), Fraction(v)) for x, v in cfg[key]]
        return cls(kind, tuple(x for x, _ in pairs), tuple(v for _, v in pairs))

    def _right(self, i: int) -> Fraction:
        return self.xs[i + 1] if i + 1 < len(self.xs) else Fraction(1)

    def _piece_integral(self, i: int, t: Fraction) -> Fraction:
        """Integral over [x_i, t] for x_i <= t <= x_{i+1}."""
        a = self.xs[i]
        if self.kind == "step":
            return self.values[i] * (t - a)
        b = self._right(i)
        va = self.values[i]
        vb = self.values[i + 1] if i + 1 < len(self.values) else self.values[0]
        vt = va + (vb - va) * (t - a) / (b - a)
        return (va + vt) * (t - a) / 2

    @property
    def period_integral(self) -> Fraction:
        return self._cumulative[-1]

    def integral_to(self, t: Fraction) -> Fraction:
        """Integral over [0, t] for 0 <= t <= 1."""
        if t == 1:
            return self.period_integral
        i = bisect_right(self.xs, t) - 1
        return self._cumulative[i] + self._piece_integral(i, t)


def path_integral_h(h0: Density, x) -> Fraction:
    """h(x) = integral of h0 from 0 to x, signed (the direct segment in one dimension)."""
    x = _frac(x)
    n = math.floor(x)
    return n * h0.period_integral + h0.integral_to(x - n)


# --- triples on the line and monotone actions --------------------------------


def line_triple(
    base_points: Sequence | None = None,
    grid: int | None = None,
    h=None,
    M0: Fraction = Fraction(0),
    label: str = "line",
) -> Triple:
    """X = base_points + Z (or the grid (1/grid)Z) with F_n = X in [n, n+1).

    ``h`` defaults to the identity. The Z-action is integer translation.
    """
    if base_points is None:
        if grid is None:
            raise DomainError("give base_points or grid")
        base = [Fraction(j, grid) for j in range(grid)]
    else:
        base = sorted(_frac(p) for p in base_points)
        if any(not 0 <= p < 1 for p in base):
            raise DomainError("base points must lie in [0,1)")
    hf = h or (lambda x: x)
    return Triple(
        domain_points=lambda k, trunc: [p + k for p in base],
        dom=lambda x: math.floor(x),
        h=hf,
        a_action=lambda k, x: x + k,
        M0=Fraction(M0),
        label=label,
    )


def density_triple(h0: Density, grid: int = 8) -> Triple:
    return line_triple(grid=grid, h=lambda x: path_integral_h(h0, x), label="path-integral")


def lift_action(p: Presentation, lifts: dict[str, CircleLift] | Sequence[CircleLift]) -> GActionOnTriple:
    """Left action of words: generator g acts by its lift, g^-1 by the inverse lift."""
    if isinstance(lifts, dict):
        lifts = [lifts[name] for name in p.names]
    lifts = list(lifts)
    if len(lifts) != len(p.names):
        raise DomainError("one lift per generator is required")
    inverses = [f.inverse() for f in lifts]

    def act(w: Word, x):
        x = _frac(x)
        for g, e in reversed(w.units):
            if e > 0:
                for _ in range(e):
                    x = lifts[g](x)
            else:
                for _ in range(-e):
                    x = inverses[g](x)
        return x

    return GActionOnTriple(p, act, label="lifts")


def word_lift(act_lifts: Sequence[CircleLift], w: Word) -> CircleLift:
    f = CircleLift.rotation(0)
    for g, e in w.units:
        f = f.compose(act_lifts[g].power(e))
    return f


@dataclass
class MonotoneTripleAction:
    action: GActionOnTriple
    triple: Triple


@dataclass
class MonotoneReport:
    failures: list[AxiomFailure]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed(self, condition: str) -> bool:
        return any(f.axiom == condition for f in self.failures)


def check_monotone_conditions(
    mta: MonotoneTripleAction,
    points: Sequence,
    g_set: Sequence[Word],
    alphas: Iterable[int] = (-2, -1, 1, 2),
) -> MonotoneReport:
    """(a) g preserves the order of h, (b) g preserves level sets of h, (c) b == 0."""
    if not points:
        raise DomainError("need sample points")
    t, act = mta.triple, mta.action
    failures = []
    checked = 0
    for g in g_set:
        images = [(Fraction(t.h(x)), Fraction(t.h(act.act(g, x))), x) for x in points]
        for hx, hgx, x in images:
            for hy, hgy, y in images:
                checked += 1
                if (hgx >= hgy) != (hx >= hy):
                    failures.append(AxiomFailure("a", (g, x, y), "order of h not preserved"))
                if hx == hy and hgx != hgy:
                    failures.append(AxiomFailure("b", (g, x, y), "level set of h not preserved"))
    for x in points:
        for k in alphas:
            b = Fraction(t.h(t.a_action(k, x))) - Fraction(t.h(x)) - k
            if b != 0:
                failures.append(AxiomFailure("c", (x, k), f"b = {frac_str(b)}"))
    return MonotoneReport(failures, checked)


def width_theorem_check(mta: MonotoneTripleAction, g: Word, truncation: int = 1) -> DisplacementCertificate:
    """h(g(F_0)) fits in an interval of width 1."""
    return displacement_certificate(mta.action, mta.triple, g, truncation, Fraction(1))


def extend_to_line(mta: MonotoneTripleAction, g: Word, truncation: int = 1) -> CircleLift:
    """PL interpolation of the induced map h(x) -> h(g x) on h(X)."""
    t = mta.triple
    pts = [(Fraction(t.h(x)), Fraction(t.h(mta.action.act(g, x)))) for x in t.domain_points(0, truncation)]
    try:
        return from_graph(pts)
    except DomainError as exc:
        raise HypothesisViolation(f"induced map of {g} is not monotone: {exc}") from None

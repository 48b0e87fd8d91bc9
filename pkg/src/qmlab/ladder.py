"""The ladder L = H x Z and the embedding of a group induced by a quasimorphism.

H is the discrete set {1 - 2^-(k+1) : k >= 0} in (0, 1), so slot k of a level
sits at height 1 - 2^-(k+1). The metric is d = d1 + d2 with d1 the distance
in H and d2 the distance in Z; the level function is the projection to Z.

Given a homogeneous quasimorphism mu with mu_h(g0) != 0, the integer-valued
mu0 = round(mu / mu_h(g0)) (with mu0(g0^n) = n forced) sorts group elements
into levels. Elements of each level fill the slots in shortlex order. Left
multiplication then acts on L through this bijection.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .qmcore import (
    DEFAULT_DOUBLINGS,
    HomogenizationResult,
    Quasimorphism,
    defect_search,
    frac_str,
    homogenize,
)
from .triple import GActionOnTriple, OutOfTruncation, Triple
from .words import DomainError, Presentation, Word, enumerate_words, multiply

DEFAULT_B_LENGTH = 6
DEFAULT_FORCED_POWERS = 64


# --- the metric space ---------------------------------------------------


@dataclass(frozen=True, order=True)
class LadderPoint:
    level: int
    slot: int

    @property
    def height(self) -> Fraction:
        return 1 - Fraction(1, 2 ** (self.slot + 1))


def d1(p: LadderPoint, q: LadderPoint) -> Fraction:
    return abs(p.height - q.height)


def d2(p: LadderPoint, q: LadderPoint) -> int:
    return abs(p.level - q.level)


def distance(p: LadderPoint, q: LadderPoint) -> Fraction:
    return d1(p, q) + d2(p, q)


def level(p: LadderPoint) -> int:
    return p.level


# --- integer-valued quasimorphism ------------------------------------------


def round_half_away(x: Fraction) -> int:
    return _round_ratio(x.numerator, x.denominator)


def _round_ratio(n: int, d: int) -> int:
    """round_half_away(n/d) for d > 0."""
    q = (2 * abs(n) + d) // (2 * d)
    return q if n >= 0 else -q


@dataclass
class IntegerizedQM:
    base_mu: Quasimorphism
    witness: Word
    scale: Fraction
    scale_error: Fraction
    forced: dict[Word, int]
    defect_bound: Fraction
    max_deviation: Fraction

    def __call__(self, w: Word) -> int:
        v = self.forced.get(w)
        if v is not None:
            return v
        x = self.base_mu(w)
        s = self.scale
        if isinstance(x, int):
            # x / s with s = p/q is x*q/p
            p, q = s.numerator, s.denominator
            return _round_ratio(x * q, p) if p > 0 else _round_ratio(-x * q, -p)
        return round_half_away(Fraction(x) / s)

    @property
    def claimed_defect(self) -> Fraction:
        return self.defect_bound

    def as_quasimorphism(self) -> Quasimorphism:
        return Quasimorphism(self, self.defect_bound, f"mu0[{self.base_mu.label}; g0={self.witness}]")


def integerize(
    mu: Quasimorphism,
    g0: Word,
    doublings: int = DEFAULT_DOUBLINGS,
    forced_powers: int = DEFAULT_FORCED_POWERS,
    defect_bound: Fraction | None = None,
) -> IntegerizedQM:
    """Integer-valued mu0 with mu0(1) = 0, mu0(g0^n) = n for |n| <= forced_powers,
    and homogenization mu_h / mu_h(g0).

    Its defect is at most D/|s| + 3*max_dev, where s estimates mu_h(g0) and
    max_dev bounds |mu0 - mu/s| (1/2 from rounding, more where values are forced).
    """
    D = defect_bound if defect_bound is not None else mu.claimed_defect
    if D is None:
        raise DomainError("integerize needs a certified defect bound")
    hg = homogenize(mu, g0, doublings, D)
    if abs(hg.value) <= hg.error_bound:
        raise DomainError(
            f"mu_h({g0}) = {frac_str(hg.value)} +- {frac_str(hg.error_bound)} is not certified nonzero"
        )
    s = hg.value
    forced: dict[Word, int] = {}
    for n in range(-forced_powers, forced_powers + 1):
        forced.setdefault(g0**n, n)
    forced[g0.presentation.identity()] = 0
    max_dev = Fraction(1, 2)
    for w, n in forced.items():
        max_dev = max(max_dev, abs(n - Fraction(mu(w)) / s))
    bound = Fraction(D) / abs(s) + 3 * max_dev
    return IntegerizedQM(mu, g0, s, hg.error_bound, forced, bound, max_dev)


@dataclass
class IntegerizationReport:
    homogenization_ok: bool
    levels_nonempty: bool
    identity_zero: bool
    integer_valued: bool
    worst_gap: Fraction

    @property
    def ok(self) -> bool:
        return self.homogenization_ok and self.levels_nonempty and self.identity_zero and self.integer_valued


def validate_integerized(
    iq: IntegerizedQM, sample: Sequence[Word], n_range: int = 16, doublings: int = 10
) -> IntegerizationReport:
    """On a sample: mu0 homogenizes to mu_h/s, hits every n on powers of g0, vanishes at 1 and is integral."""
    D = iq.base_mu.claimed_defect
    s, eps = abs(iq.scale), iq.scale_error
    homog_ok = True
    worst = Fraction(0)
    for g in sample:
        a = homogenize(iq, g, doublings, iq.defect_bound)
        b = homogenize(iq.base_mu, g, doublings, D)
        target = b.value / iq.scale
        allowed = a.error_bound + b.error_bound / s + abs(target) * eps / max(s - eps, Fraction(1, 10**9))
        gap = abs(a.value - target)
        worst = max(worst, gap - allowed)
        if gap > allowed:
            homog_ok = False
    g0 = iq.witness
    nonempty = all(iq(g0**n) == n for n in range(-n_range, n_range + 1))
    ident = iq(g0.presentation.identity()) == 0
    integral = all(isinstance(iq(g), int) for g in sample)
    return IntegerizationReport(homog_ok, nonempty, ident, integral, worst)


def find_witness(
    mu: Quasimorphism, p: Presentation, max_length: int = 3, doublings: int = DEFAULT_DOUBLINGS
) -> Word:
    """First word in shortlex order whose homogenization is certified nonzero."""
    for w in enumerate_words(p, max_length):
        if w.is_identity():
            continue
        hg = homogenize(mu, w, doublings)
        if abs(hg.value) > hg.error_bound:
            return w
    raise DomainError(f"no word of length <= {max_length} has certified nonzero {mu.label}")


# --- the embedding ---------------------------------------------------------


@dataclass
class LadderEmbedding:
    group: Presentation
    iq: IntegerizedQM
    max_length: int
    by_word: dict[Word, LadderPoint]
    by_point: dict[LadderPoint, Word]
    B: Fraction
    B_length: int
    B_witness: tuple | None = field(default=None, repr=False)

    def psi(self, w: Word) -> LadderPoint:
        try:
            return self.by_word[w]
        except KeyError:
            raise OutOfTruncation(f"{w} is outside the embedding truncation") from None

    def preimage(self, pt: LadderPoint) -> Word:
        try:
            return self.by_point[pt]
        except KeyError:
            raise OutOfTruncation(f"{pt} has no assigned group element") from None

    @property
    def base(self) -> LadderPoint:
        return self.psi(self.group.identity())

    def level_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = defaultdict(int)
        for pt in self.by_point:
            sizes[pt.level] += 1
        return dict(sorted(sizes.items()))

    def level_table(self) -> list[tuple[str, int, int]]:
        rows = sorted(self.by_word.items(), key=lambda kv: kv[0].shortlex_key())
        return [(str(w), pt.level, pt.slot) for w, pt in rows]


def build_embedding(
    p: Presentation,
    iq: IntegerizedQM,
    max_length: int,
    extra_words: Iterable[Word] = (),
    b_length: int | None = None,
) -> LadderEmbedding:
    """Assign every word of length <= max_length (plus ``extra_words``) a ladder point.

    B is twice the exhaustive defect of mu0 over words of length <= b_length:
    the root-condition quantity mu0(gx) - mu0(gy) - mu0(x) + mu0(y) equals
    delta(g,x) - delta(g,y) with delta the defect cocycle, so B bounds it for
    every g, x, y within that length.
    """
    if max_length < 1:
        raise DomainError("max_length must be at least 1")
    words = list(enumerate_words(p, max_length))
    seen = set(words)
    for w in extra_words:
        if w not in seen:
            seen.add(w)
            words.append(w)
    levels: dict[int, list[Word]] = defaultdict(list)
    for w in words:
        levels[iq(w)].append(w)
    by_word: dict[Word, LadderPoint] = {}
    by_point: dict[LadderPoint, Word] = {}
    for lev, ws in levels.items():
        ws.sort(key=Word.shortlex_key)
        for slot, w in enumerate(ws):
            pt = LadderPoint(lev, slot)
            by_word[w] = pt
            by_point[pt] = w
    if b_length is None:
        b_length = min(max_length, DEFAULT_B_LENGTH)
    defect, witness = defect_search(iq, p, b_length)
    return LadderEmbedding(p, iq, max_length, by_word, by_point, 2 * defect, b_length, witness)


def induced_action(e: LadderEmbedding, g: Word, pt: LadderPoint) -> LadderPoint:
    """Psi(g * Psi^-1(pt)); raises OutOfTruncation rather than guessing."""
    return e.psi(multiply(g, e.preimage(pt)))


@dataclass
class QICertificate:
    g: Word
    distortion_d: Fraction
    distortion_d2: int
    root: int
    B: Fraction
    checked: int
    skipped: int

    @property
    def ok(self) -> bool:
        return self.distortion_d <= self.B + 2 and self.distortion_d2 <= self.B and self.root <= self.B

    def to_json(self) -> dict:
        return {
            "g": str(self.g),
            "distortion_d": frac_str(self.distortion_d),
            "distortion_d2": self.distortion_d2,
            "root": self.root,
            "B": frac_str(self.B),
            "bound_d": f"B+2 = {frac_str(self.B + 2)}",
            "checked": self.checked,
            "skipped_out_of_truncation": self.skipped,
            "ok": self.ok,
        }


def qi_certificate(
    e: LadderEmbedding, g: Word, pairs: Iterable[tuple[LadderPoint, LadderPoint]]
) -> QICertificate:
    """Additive distortion of d and of d2 under the induced action of g.

    ``root`` is the signed version for the level function, i.e. the bound
    that places the map in QI^h(L, d).
    """
    worst_d = Fraction(0)
    worst_d2 = 0
    worst_root = 0
    checked = skipped = 0
    for x, y in pairs:
        try:
            gx = induced_action(e, g, x)
            gy = induced_action(e, g, y)
        except OutOfTruncation:
            skipped += 1
            continue
        checked += 1
        worst_d = max(worst_d, abs(distance(gx, gy) - distance(x, y)))
        worst_d2 = max(worst_d2, abs(d2(gx, gy) - d2(x, y)))
        worst_root = max(worst_root, abs((gx.level - gy.level) - (x.level - y.level)))
    return QICertificate(g, worst_d, worst_d2, worst_root, e.B, checked, skipped)


@dataclass
class Orbit:
    g: Word
    levels: list[int]

    def value(self, n: int | None = None) -> Fraction:
        n = len(self.levels) - 1 if n is None else n
        return Fraction(self.levels[n] - self.levels[0], n)


def orbit(e: LadderEmbedding, g: Word, n_iters: int, start: LadderPoint | None = None) -> Orbit:
    pt = e.base if start is None else start
    levels = [pt.level]
    for _ in range(n_iters):
        pt = induced_action(e, g, pt)
        levels.append(pt.level)
    return Orbit(g, levels)


def reconstruct_mu(e: LadderEmbedding, g: Word, n_iters: int) -> Fraction:
    """h(g^n . x0) / n for x0 = Psi(1): the orbit slope estimating mu_h(g)/mu_h(g0)."""
    if n_iters < 1:
        raise DomainError("n_iters must be at least 1")
    return orbit(e, g, n_iters).value()


def reconstruction_tolerance(e: LadderEmbedding, n: int, homog: HomogenizationResult) -> Fraction:
    """B/n + 1/n + the homogenization error scaled by 1/|s|."""
    return (e.B + 1) / n + homog.error_bound / abs(e.iq.scale)


def orbit_words(gs: Iterable[Word], n_iters: int) -> list[Word]:
    """g^n for 0 <= n <= n_iters, for enlarging an embedding to hold orbits."""
    out = []
    for g in gs:
        x = g.presentation.identity()
        for _ in range(n_iters):
            x = multiply(g, x)
            out.append(x)
    return out


@dataclass
class EquivalenceVerdict:
    status: str  # "equivalent-so-far" | "inequivalent"
    witness: tuple[Word, int] | None
    max_delta: int
    trace: list[tuple[str, int, int]]
    threshold: int
    n_iters: int

    def to_json(self) -> dict:
        return {
            "verdict": self.status,
            "witness": None if self.witness is None else {"g": str(self.witness[0]), "n": self.witness[1]},
            "max_delta": self.max_delta,
            "threshold": self.threshold,
            "n_iters": self.n_iters,
            "sample_certified": True,
            "trace": [{"g": g, "n": n, "delta": d} for g, n, d in self.trace],
        }


def equivalence_test(
    e1: LadderEmbedding,
    e2: LadderEmbedding,
    g_sample: Sequence[Word],
    n_iters: int = 200,
    threshold: int = 10,
) -> EquivalenceVerdict:
    """Compare orbit levels of the two induced actions from the base point.

    Divergence past ``threshold`` proves the orbits are not boundedly close
    on the sample; otherwise the verdict only says no divergence was seen.
    """
    if e1.group != e2.group:
        raise DomainError("embeddings must be over the same group")
    trace = []
    max_delta = 0
    for g in g_sample:
        p1, p2 = e1.base, e2.base
        for n in range(1, n_iters + 1):
            p1 = induced_action(e1, g, p1)
            p2 = induced_action(e2, g, p2)
            delta = abs(p1.level - p2.level)
            trace.append((str(g), n, delta))
            max_delta = max(max_delta, delta)
            if delta > threshold:
                return EquivalenceVerdict("inequivalent", (g, n), max_delta, trace, threshold, n_iters)
    return EquivalenceVerdict("equivalent-so-far", None, max_delta, trace, threshold, n_iters)


# --- as a triple -----------------------------------------------------------


def ladder_triple(e: LadderEmbedding) -> Triple:
    """The ladder as an (X, h, Z)-triple, with X identified with G through Psi.

    F_k is level k, h is the level, and Z shifts levels keeping the slot.
    """

    def domain_points(k: int, truncation: int) -> list[Word]:
        out = []
        slot = 0
        while True:
            w = e.by_point.get(LadderPoint(k, slot))
            if w is None:
                return out
            out.append(w)
            slot += 1

    def a_action(k: int, w: Word) -> Word:
        pt = e.psi(w)
        return e.preimage(LadderPoint(pt.level + k, pt.slot))

    return Triple(
        domain_points=domain_points,
        dom=e.iq,
        h=e.iq,
        a_action=a_action,
        M0=Fraction(0),
        label=f"ladder[{e.iq.base_mu.label}]",
    )


def ladder_action(e: LadderEmbedding) -> GActionOnTriple:
    """Left multiplication, which almost commutes with level shifts up to B."""
    return GActionOnTriple(e.group, multiply, almost_bound=e.B, label="left-multiplication")

"""Quasimorphisms: evaluation, defect search and homogenization.

Every value is an exact rational. A quasimorphism may carry a claimed defect;
a claim is only trusted after :func:`defect_lower_bound` fails to refute it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable

from .words import DomainError, Presentation, Word, enumerate_words, multiply, parse_word

Rational = Fraction | int

DEFAULT_DOUBLINGS = 14
DEFAULT_CERTIFY_LENGTH = 6


@dataclass
class Quasimorphism:
    evaluator: Callable[[Word], Rational]
    claimed_defect: Fraction | None = None
    label: str = "mu"
    certificate: Any = field(default=None, repr=False)

    def __call__(self, w: Word) -> Rational:
        return self.evaluator(w)

    def scaled(self, c: Rational) -> "Quasimorphism":
        c = Fraction(c)
        f = self.evaluator
        defect = None if self.claimed_defect is None else abs(c) * self.claimed_defect
        return Quasimorphism(lambda w: c * f(w), defect, f"{c}*{self.label}")

    @property
    def certified(self) -> bool:
        return self.claimed_defect is not None


@dataclass(frozen=True)
class HomogenizationResult:
    value: Fraction
    error_bound: Fraction
    iterations: int
    sequence: tuple[Fraction, ...] = ()
    torsion: bool = False

    def to_json(self) -> dict:
        return {
            "value": frac_str(self.value),
            "error_bound": frac_str(self.error_bound),
            "iterations": self.iterations,
            "torsion": self.torsion,
        }


@dataclass(frozen=True)
class Verdict:
    ok: bool
    observed: Fraction
    allowed: Fraction
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def frac_str(x: Rational | None) -> str | None:
    if x is None:
        return None
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def defect_search(
    mu: Callable[[Word], Rational], p: Presentation, max_length: int
) -> tuple[Fraction, tuple[Word, Word] | None]:
    """Exhaustive max of |mu(xy) - mu(x) - mu(y)| over words of length <= max_length.

    Returns the maximum and a pair attaining it (None when the max is 0).
    """
    if max_length < 1:
        raise DomainError("max_length must be at least 1")
    words = list(enumerate_words(p, max_length))
    vals = [mu(w) for w in words]
    best = 0
    witness = None
    for x, mx in zip(words, vals):
        for y, my in zip(words, vals):
            dev = mu(multiply(x, y)) - mx - my
            if dev < 0:
                dev = -dev
            if dev > best:
                best, witness = dev, (x, y)
    return Fraction(best), witness


def defect_lower_bound(mu: Callable[[Word], Rational], p: Presentation, max_length: int) -> Fraction:
    return defect_search(mu, p, max_length)[0]


def homogenize(
    mu: Callable[[Word], Rational],
    g: Word,
    doublings: int = DEFAULT_DOUBLINGS,
    defect_bound: Rational | None = None,
    square: Callable[[Word], Word] | None = None,
) -> HomogenizationResult:
    """Estimate lim mu(g^n)/n along n = 2^k, k = 0..doublings.

    |mu_h(g) - mu(g^n)/n| <= D/n, so the returned error bound is D/2^doublings.
    If the squaring sequence revisits an element, g has finite order and the
    homogenization is exactly 0.
    """
    if doublings < 1:
        raise DomainError("doublings must be at least 1")
    if defect_bound is None:
        defect_bound = getattr(mu, "claimed_defect", None)
    if defect_bound is None:
        raise DomainError("homogenize needs a defect bound")
    D = Fraction(defect_bound)
    sq = square or (lambda w: multiply(w, w))
    seen = {g}
    x = g
    seq = [Fraction(mu(g))]
    for k in range(1, doublings + 1):
        x = sq(x)
        if x in seen:
            return HomogenizationResult(Fraction(0), Fraction(0), k, tuple(seq), torsion=True)
        seen.add(x)
        seq.append(Fraction(mu(x), 2**k))
    return HomogenizationResult(seq[-1], D / 2**doublings, doublings, tuple(seq))


def check_homogeneous(
    mu: Callable[[Word], Rational],
    g: Word,
    k: int,
    tolerance: Rational = 0,
    doublings: int = DEFAULT_DOUBLINGS,
    defect_bound: Rational | None = None,
) -> Verdict:
    """mu_h(g^k) = k mu_h(g), up to the two homogenization error bounds."""
    if k == 0:
        raise DomainError("k must be nonzero")
    base = homogenize(mu, g, doublings, defect_bound)
    if k == 1:
        return Verdict(True, Fraction(0), Fraction(0), "same computation")
    powered = homogenize(mu, g**k, doublings, defect_bound)
    observed = abs(powered.value - k * base.value)
    allowed = abs(k) * base.error_bound + powered.error_bound + Fraction(tolerance)
    return Verdict(observed <= allowed, observed, allowed)


def check_conjugation_invariance(
    mu: Callable[[Word], Rational],
    g: Word,
    t: Word,
    doublings: int = DEFAULT_DOUBLINGS,
    defect_bound: Rational | None = None,
) -> Verdict:
    a = homogenize(mu, g, doublings, defect_bound)
    b = homogenize(mu, t * g * ~t, doublings, defect_bound)
    observed = abs(a.value - b.value)
    allowed = a.error_bound + b.error_bound
    return Verdict(observed <= allowed, observed, allowed)


# --- concrete quasimorphisms ----------------------------------------------


def hom_qm(p: Presentation, weights: dict[str, Rational]) -> Quasimorphism:
    """The homomorphism sending each generator to its weight (exponent sums)."""
    w = [Fraction(weights.get(name, 0)) for name in p.names]
    for g, o in enumerate(p.orders):
        if o is not None and w[g] != 0:
            raise DomainError(f"finite-order generator {p.names[g]} must have weight 0")
    integral = all(x.denominator == 1 for x in w)
    wi = [int(x) for x in w] if integral else w

    def evaluate(word: Word) -> Rational:
        return sum(wi[g] * e for g, e in word.units)

    label = "hom(" + ",".join(f"{n}:{frac_str(x)}" for n, x in zip(p.names, w)) + ")"
    return Quasimorphism(evaluate, Fraction(0), label)


def count_occurrences(units: tuple, pattern: tuple) -> int:
    m = len(pattern)
    if m == 1:
        return units.count(pattern[0])
    first = pattern[0]
    n = 0
    for i in range(len(units) - m + 1):
        if units[i] == first and units[i : i + m] == pattern:
            n += 1
    return n


def _has_border(pattern: str) -> bool:
    """True when a proper prefix equals a suffix, i.e. occurrences can overlap."""
    return any(pattern[:k] == pattern[-k:] for k in range(1, len(pattern)))


def counting_evaluator(pattern: Word) -> Callable[[Word], int]:
    pat = pattern.units
    inv = (~pattern).units
    if pat == inv:
        return lambda w: 0
    # scan a one-character-per-unit string; str.count is exact when occurrences cannot overlap
    code: dict = {}
    for g, _ in pattern.presentation.letters:
        for e in (1, -1):
            code.setdefault((g, e), chr(0x41 + len(code)))
    sp = "".join(code[u] for u in pat)
    si = "".join(code[u] for u in inv)
    if _has_border(sp):
        rp, ri = re.compile(f"(?={re.escape(sp)})"), re.compile(f"(?={re.escape(si)})")

        def evaluate(w: Word) -> int:
            s = "".join(map(code.__getitem__, w.units))
            return len(rp.findall(s)) - len(ri.findall(s))

    else:

        def evaluate(w: Word) -> int:
            s = "".join(map(code.__getitem__, w.units))
            return s.count(sp) - s.count(si)

    return evaluate


@lru_cache(maxsize=None)
def _certified_counting_defect(p: Presentation, pattern_units: tuple, certify_length: int) -> Fraction:
    f = counting_evaluator(Word(p, pattern_units))
    return 2 * defect_lower_bound(f, p, certify_length)


def counting_qm(
    p: Presentation, pattern: Word | str, certify_length: int = DEFAULT_CERTIFY_LENGTH
) -> Quasimorphism:
    """Overlapping subword count of ``pattern`` minus that of its inverse.

    The claimed defect is twice the exhaustive defect up to ``certify_length``,
    or 0 for a single letter.
    """
    if p.kind != "free":
        raise DomainError("counting quasimorphisms are defined here on free groups only")
    if isinstance(pattern, str):
        pattern = parse_word(p, pattern)
    if pattern.is_identity():
        raise DomainError("counting pattern must be nonempty")
    if len(pattern.units) == 1:
        # one letter: the count is the exponent sum, a homomorphism
        defect = Fraction(0)
    else:
        defect = _certified_counting_defect(p, pattern.units, certify_length)
    return Quasimorphism(counting_evaluator(pattern), defect, f"count({pattern})")


def qm_from_config(p: Presentation, cfg: dict) -> Quasimorphism:
    """``{"kind":"counting","pattern":"ab"}``, ``{"kind":"hom","weights":{"a":1}}``,
    ``{"kind":"rademacher"}``; an optional ``"scale"`` multiplies the result and
    an optional ``"defect"`` replaces the claimed defect (a claim to be tested)."""
    kind = cfg.get("kind")
    if kind == "counting":
        qm = counting_qm(p, cfg["pattern"], int(cfg.get("certify_length", DEFAULT_CERTIFY_LENGTH)))
    elif kind == "hom":
        qm = hom_qm(p, {k: Fraction(v) for k, v in cfg["weights"].items()})
    elif kind == "rademacher":
        from .psl2z import rademacher_qm

        qm = rademacher_qm(int(cfg.get("certify_length", DEFAULT_CERTIFY_LENGTH)))
    else:
        raise DomainError(f"unknown quasimorphism kind {kind!r}")
    if "scale" in cfg:
        qm = qm.scaled(Fraction(cfg["scale"]))
    if "defect" in cfg:
        qm = Quasimorphism(qm.evaluator, Fraction(cfg["defect"]), qm.label)
    return qm


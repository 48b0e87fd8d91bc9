"""(X, h, A)-triples, group actions on them, and quasimorphisms read off orbits.

A is always Z acting by ``a_action(k, x)``, with rho the identity. Spaces are
infinite, so every check runs over a truncation: domains F_k with
|k| <= truncation, each enumerated up to whatever the triple exposes.
Points that fall outside a truncated model raise :class:`OutOfTruncation`
and are counted as skipped, never silently treated as passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Sequence

from .qmcore import Quasimorphism, frac_str
from .words import DomainError, Presentation, Word

Point = Hashable


class OutOfTruncation(LookupError):
    """A requested point lies beyond the finite part of an infinite model."""


class HypothesisViolation(Exception):
    """A hypothesis of the quasimorphism construction failed on a sample."""

    def __init__(self, message: str, certificate: Any = None):
        super().__init__(message)
        self.certificate = certificate


def _identity_rho(k: int) -> int:
    return k


@dataclass
class Triple:
    """X partitioned into domains F_k, a level function h and the Z-action.

    ``domain_points(k, truncation)`` lists the sampled points of F_k.
    ``M0`` is the bound claimed for the cocycle error
    b(x, k) = h(k.x) - h(x) - k.
    """

    domain_points: Callable[[int, int], Sequence[Point]]
    dom: Callable[[Point], int]
    h: Callable[[Point], Fraction]
    a_action: Callable[[int, Point], Point]
    M0: Fraction = Fraction(0)
    label: str = "triple"
    rho: Callable[[int], int] = None

    def __post_init__(self):
        if self.rho is None:
            self.rho = _identity_rho


@dataclass
class GActionOnTriple:
    group: Presentation
    act: Callable[[Word, Point], Point]
    almost_bound: Fraction | None = None  # None: the actions commute exactly
    label: str = "action"

    @property
    def commutation_mode(self) -> str:
        return "exact" if self.almost_bound is None else "almost"


@dataclass
class AxiomFailure:
    axiom: str
    witness: Any
    detail: str = ""


@dataclass
class TripleReport:
    failures: list[AxiomFailure]
    max_b: Fraction
    M0: Fraction
    checked: dict[str, int]
    skipped: int
    domain_width: Fraction

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "axioms": {
                name: not any(f.axiom == name for f in self.failures)
                for name in ("partition", "bijection", "h-range", "cocycle", "domain-width")
            },
            "max_abs_b": frac_str(self.max_b),
            "M0": frac_str(self.M0),
            "domain_width": frac_str(self.domain_width),
            "checked": self.checked,
            "skipped_out_of_truncation": self.skipped,
            "failures": [
                {"axiom": f.axiom, "witness": str(f.witness), "detail": f.detail} for f in self.failures
            ],
        }


def verify_triple(t: Triple, truncation: int) -> TripleReport:
    """Check partition, bijectivity of F_0 -> F_k, h(F_0) in [0,1) and |b| <= M0.

    Also checks the consequence h(F_k) within an interval of width 1 + 2*M0.
    """
    if truncation < 0:
        raise DomainError("truncation must be non-negative")
    failures: list[AxiomFailure] = []
    checked = {"points": 0, "maps": 0}
    skipped = 0
    max_b = Fraction(0)
    F0 = list(t.domain_points(0, truncation))
    width_max = Fraction(0)

    for x in F0:
        hx = Fraction(t.h(x))
        if not (0 <= hx < 1):
            failures.append(AxiomFailure("h-range", x, f"h = {frac_str(hx)} not in [0,1)"))

    for k in range(-truncation, truncation + 1):
        Fk = list(t.domain_points(k, truncation))
        for y in Fk:
            checked["points"] += 1
            if t.dom(y) != k:
                failures.append(AxiomFailure("partition", y, f"listed in F_{k} but labelled {t.dom(y)}"))
        if Fk:
            hs = [Fraction(t.h(y)) for y in Fk]
            width_max = max(width_max, max(hs) - min(hs))

        images = {}
        for x in F0:
            try:
                y = t.a_action(k, x)
            except OutOfTruncation:
                skipped += 1
                continue
            checked["maps"] += 1
            if t.dom(y) != k:
                failures.append(AxiomFailure("bijection", x, f"image under {k} lands in F_{t.dom(y)}"))
            if y in images:
                failures.append(AxiomFailure("bijection", x, f"collides with {images[y]} under {k}"))
            images[y] = x
            b = Fraction(t.h(y)) - Fraction(t.h(x)) - t.rho(k)
            if abs(b) > max_b:
                max_b = abs(b)
            if abs(b) > t.M0:
                failures.append(AxiomFailure("cocycle", (x, k), f"|b| = {frac_str(abs(b))} > M0"))
        for y in Fk:
            try:
                x = t.a_action(-k, y)
            except OutOfTruncation:
                skipped += 1
                continue
            if t.dom(x) != 0 or t.a_action(k, x) != y:
                failures.append(AxiomFailure("bijection", y, f"no preimage in F_0 under {k}"))

    if width_max > 1 + 2 * t.M0:
        failures.append(AxiomFailure("domain-width", None, f"width {frac_str(width_max)} > 1 + 2*M0"))
    return TripleReport(failures, max_b, Fraction(t.M0), checked, skipped, width_max)


def check_action_axioms(
    act: GActionOnTriple, points: Iterable[Point], g_set: Sequence[Word]
) -> list[AxiomFailure]:
    """act(1, x) = x and act(gg', x) = act(g, act(g', x)) on samples."""
    failures = []
    e = act.group.identity()
    for x in points:
        if act.act(e, x) != x:
            failures.append(AxiomFailure("identity", x))
        for g in g_set:
            for g2 in g_set:
                if act.act(g * g2, x) != act.act(g, act.act(g2, x)):
                    failures.append(AxiomFailure("compatibility", (g, g2, x)))
    return failures


@dataclass
class CommutationReport:
    mode: str
    observed: Fraction
    allowed: Fraction
    checked: int
    skipped: int
    witness: Any = None

    @property
    def ok(self) -> bool:
        return self.observed <= self.allowed and (self.mode == "almost" or self.witness is None)


def check_commutation(
    act: GActionOnTriple,
    t: Triple,
    points: Iterable[Point],
    g_set: Sequence[Word],
    alphas: Iterable[int],
) -> CommutationReport:
    """Exact mode: pointwise equality. Almost mode: |h(a.g.x) - h(g.a.x)| <= bound."""
    observed = Fraction(0)
    checked = skipped = 0
    witness = None
    alphas = list(alphas)
    for x in points:
        for g in g_set:
            for k in alphas:
                try:
                    lhs = t.a_action(k, act.act(g, x))
                    rhs = act.act(g, t.a_action(k, x))
                except OutOfTruncation:
                    skipped += 1
                    continue
                checked += 1
                dev = abs(Fraction(t.h(lhs)) - Fraction(t.h(rhs)))
                if dev > observed:
                    observed = dev
                if act.almost_bound is None and lhs != rhs and witness is None:
                    witness = (g, k, x)
                elif act.almost_bound is not None and dev > act.almost_bound and witness is None:
                    witness = (g, k, x)
    allowed = Fraction(0) if act.almost_bound is None else Fraction(act.almost_bound)
    return CommutationReport(act.commutation_mode, observed, allowed, checked, skipped, witness)


def mu_from_action(act: GActionOnTriple, t: Triple, basepoint: Point, g: Word) -> Fraction:
    return Fraction(t.h(act.act(g, basepoint))) - Fraction(t.h(basepoint))


@dataclass
class RootReport:
    observed: Fraction
    witness: Any
    checked: int


def check_root_condition(
    act: GActionOnTriple, t: Triple, pairs: Iterable[tuple[Point, Point]], g_set: Sequence[Word]
) -> RootReport:
    """max |(h(gx) - h(gy)) - (h(x) - h(y))| over the sample."""
    best = Fraction(0)
    witness = None
    n = 0
    pairs = list(pairs)
    for g in g_set:
        for x, y in pairs:
            dev = abs(
                (Fraction(t.h(act.act(g, x))) - Fraction(t.h(act.act(g, y))))
                - (Fraction(t.h(x)) - Fraction(t.h(y)))
            )
            n += 1
            if witness is None or dev > best:
                best, witness = dev, (g, x, y)
    return RootReport(best, witness, n)


@dataclass
class DisplacementCertificate:
    g: Word
    r: Fraction
    width: Fraction
    C0: Fraction | None
    sample_size: int

    @property
    def ok(self) -> bool:
        return self.C0 is None or self.width <= self.C0

    def to_json(self) -> dict:
        return {
            "g": str(self.g),
            "r": frac_str(self.r),
            "width": frac_str(self.width),
            "C0": frac_str(self.C0),
            "sample_size": self.sample_size,
        }


def displacement_certificate(
    act: GActionOnTriple, t: Triple, g: Word, truncation: int, C0: Fraction | None = None
) -> DisplacementCertificate:
    """h(g(F_0)) lies in [r, r + width]; raises if width exceeds a configured C0."""
    if truncation < 1:
        raise DomainError("truncation must be at least 1")
    F0 = list(t.domain_points(0, truncation))
    if not F0:
        raise DomainError("truncated fundamental domain is empty")
    hs = [Fraction(t.h(act.act(g, x))) for x in F0]
    r, top = min(hs), max(hs)
    cert = DisplacementCertificate(g, r, top - r, None if C0 is None else Fraction(C0), len(F0))
    if not cert.ok:
        raise HypothesisViolation(
            f"width {frac_str(cert.width)} of h(g(F_0)) exceeds C0 = {frac_str(C0)} for g = {g}", cert
        )
    return cert


def basepoint_independence(
    act: GActionOnTriple, t: Triple, a1: Point, a2: Point, g_set: Iterable[Word]
) -> Fraction:
    return max(
        (abs(mu_from_action(act, t, a1, g) - mu_from_action(act, t, a2, g)) for g in g_set),
        default=Fraction(0),
    )


@dataclass
class OrbitVerdict:
    unbounded: bool
    levels: list[Fraction]
    threshold: Fraction

    @property
    def slope(self) -> Fraction:
        return self.levels[-1] / (len(self.levels) - 1) if len(self.levels) > 1 else Fraction(0)


def unboundedness_check(
    act: GActionOnTriple,
    t: Triple,
    g: Word,
    basepoint: Point,
    n_max: int,
    threshold: Fraction | int = 10,
) -> OrbitVerdict:
    """Track h(g^n . a) - h(a) for n <= n_max; unbounded if it passes the threshold."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    x = basepoint
    h0 = Fraction(t.h(basepoint))
    levels = [Fraction(0)]
    for _ in range(n_max):
        x = act.act(g, x)
        levels.append(Fraction(t.h(x)) - h0)
    top = max(abs(v) for v in levels)
    return OrbitVerdict(top >= threshold, levels, Fraction(threshold))


@dataclass
class PipelineBudgets:
    truncation: int = 3
    g_sample: Sequence[Word] = ()
    point_sample: Sequence[Point] = ()
    alphas: Sequence[int] = (-2, -1, 1, 2)
    C0: Fraction = Fraction(0)


@dataclass
class PipelineCertificate:
    triple: TripleReport
    commutation: CommutationReport
    displacements: list[DisplacementCertificate]
    M0: Fraction
    C0: Fraction
    beta: Fraction
    claimed_defect: Fraction
    basepoint: Any = None
    notes: list[str] = field(default_factory=list)

    @property
    def bound_formula(self) -> str:
        s = f"4*M0+1+C0 = 4*{frac_str(self.M0)}+1+{frac_str(self.C0)}"
        if self.beta:
            s += f" + 2*beta(={frac_str(self.beta)})"
        return f"{s} = {frac_str(self.claimed_defect)}"

    def to_json(self) -> dict:
        return {
            "M0": frac_str(self.M0),
            "C0": frac_str(self.C0),
            "beta": frac_str(self.beta),
            "commutation_mode": self.commutation.mode,
            "claimed_defect": frac_str(self.claimed_defect),
            "bound": self.bound_formula,
            "triple": self.triple.to_json(),
            "commutation": {
                "observed": frac_str(self.commutation.observed),
                "allowed": frac_str(self.commutation.allowed),
                "checked": self.commutation.checked,
                "skipped_out_of_truncation": self.commutation.skipped,
            },
            "max_width": frac_str(max((c.width for c in self.displacements), default=Fraction(0))),
            "displacements": [c.to_json() for c in self.displacements],
            "basepoint": str(self.basepoint),
            "sample_certified": True,
            "notes": self.notes,
        }


def theorem3_pipeline(
    act: GActionOnTriple, t: Triple, budgets: PipelineBudgets, basepoint: Point | None = None
) -> Quasimorphism:
    """Check every hypothesis on samples, then return g -> h(g.a) - h(a).

    The claimed defect is 4*M0 + 1 + C0, plus 2*beta when the actions only
    almost commute with bound beta. The certificate is attached to the result.
    """
    report = verify_triple(t, budgets.truncation)
    if not report.ok:
        raise HypothesisViolation(f"triple axioms fail: {report.failures[0]}", report)
    points = list(budgets.point_sample) or list(t.domain_points(0, budgets.truncation))
    comm = check_commutation(act, t, points, budgets.g_sample, budgets.alphas)
    if not comm.ok:
        raise HypothesisViolation(f"commutation fails ({comm.mode}) at {comm.witness}", comm)
    if comm.checked == 0:
        raise HypothesisViolation("commutation check had no in-truncation samples", comm)
    certs = [displacement_certificate(act, t, g, budgets.truncation, budgets.C0) for g in budgets.g_sample]
    M0 = Fraction(t.M0)
    C0 = Fraction(budgets.C0)
    beta = Fraction(0) if act.almost_bound is None else Fraction(act.almost_bound)
    claimed = 4 * M0 + 1 + C0 + 2 * beta
    if basepoint is None:
        basepoint = t.domain_points(0, budgets.truncation)[0]
    cert = PipelineCertificate(report, comm, certs, M0, C0, beta, claimed, basepoint)
    h_base = Fraction(t.h(basepoint))
    if h_base.denominator == 1:
        # keep integer-valued level functions on the fast int path
        h_base = h_base.numerator
    h, move = t.h, act.act

    def evaluate(g: Word) -> Fraction:
        return h(move(g, basepoint)) - h_base

    return Quasimorphism(evaluate, claimed, f"theorem3({act.label} on {t.label})", cert)


# --- the trivial Z-triple ---------------------------------------------------


def integer_line_triple(h: Callable[[Fraction], Fraction] | None = None, M0: Fraction = Fraction(0)) -> Triple:
    """X = Z with F_n = {n}; h defaults to the identity."""
    hf = h or (lambda n: Fraction(n))
    return Triple(
        domain_points=lambda k, trunc: [Fraction(k)],
        dom=lambda x: int(x),
        h=hf,
        a_action=lambda k, x: x + k,
        M0=Fraction(M0),
        label="trivial-z",
    )


def translation_action(p: Presentation | None = None) -> GActionOnTriple:
    """Z = F_1 acting on the line by integer translation."""
    p = p or Presentation.free(1)
    return GActionOnTriple(p, lambda g, x: x + sum(e for _, e in g.units), label="translation")

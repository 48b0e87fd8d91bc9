"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""

import random
import time
from fractions import Fraction

import pytest

from qmlab.actions import run_pipeline, setup_from_config
from qmlab.circle import (
    CircleLift,
    Density,
    MonotoneTripleAction,
    check_monotone_conditions,
    density_triple,
    extend_to_line,
    lift_action,
    line_triple,
    tau_homogeneity_check,
    translation_number,
    width_theorem_check,
)
from qmlab.ladder import (
    build_embedding,
    equivalence_test,
    integerize,
    orbit_words,
    qi_certificate,
    reconstruct_mu,
    reconstruction_tolerance,
)
from qmlab.psl2z import build_psl2z_ladder, homogenized_rademacher, rademacher_qm, square_via_matrix
from qmlab.qmcore import counting_qm, hom_qm, homogenize
from qmlab.triple import (
    GActionOnTriple,
    basepoint_independence,
    check_root_condition,
    integer_line_triple,
    mu_from_action,
    theorem3_pipeline,
    translation_action,
    verify_triple,
)
from qmlab.words import PSL2Z, Presentation, enumerate_words, parse_word

F2 = Presentation.free(2)
Z = Presentation.free(1)
F = Fraction

RESULTS: list[str] = []


def record(n: int, name: str, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    within = elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    line = f"criterion {n:2d} {verdict}  {name}: {detail} [{elapsed:.1f}s < {limit:.0f}s: {within}]"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


ACTIONS = {
    "trivial-z": "trivial-z",
    "f2-counting-ladder": {"kind": "ladder", "qm": {"kind": "counting", "pattern": "ab"}, "max_length": 6, "validate_length": 6},
    "psl2z-ladder": {"kind": "psl2z-ladder", "max_length": 8, "validate_length": 6},
}

_RUNS: dict = {}


def _run(name):
    if name not in _RUNS:
        t0 = time.perf_counter()
        setup = setup_from_config(ACTIONS[name])
        run = run_pipeline(setup, 6)
        _RUNS[name] = (setup, run, time.perf_counter() - t0)
    return _RUNS[name]


def _observed_B(setup, run):
    """The embedding B for ladders, the observed root constant otherwise."""
    e = setup.extra.get("embedding")
    return e.B if e is not None else max(run.observed_defect, run.observed_root)


# 1 ----------------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(ACTIONS))
def test_criterion_01_root_bound(name):
    setup, run, elapsed = _run(name)
    cert = run.qm.certificate
    observed = max(run.observed_defect, run.observed_root)
    ok = run.error is None and observed <= run.qm.claimed_defect
    detail = (
        f"{name} observed {observed} (pairs of words <= 6) vs {cert.bound_formula}; "
        f"M0={cert.M0} C0={cert.C0} beta={cert.beta}"
    )
    record(1, "root-condition bound", ok, detail, elapsed, 60)


# 2 ----------------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(ACTIONS))
def test_criterion_02_basepoint_freedom(name):
    setup, run, _ = _run(name)
    t0 = time.perf_counter()
    B = _observed_B(setup, run)
    rng = random.Random(2)
    if name == "trivial-z":
        points = [F(n) for n in range(-10, 11)]
        gs = list(enumerate_words(Z, 6))
    else:
        p = setup.action.group
        points = list(enumerate_words(p, 3))
        gs = list(enumerate_words(p, 3))
    pairs = [tuple(rng.sample(points, 2)) for _ in range(20)]
    worst = max(basepoint_independence(setup.action, setup.triple, a1, a2, gs) for a1, a2 in pairs)
    record(2, "basepoint freedom", worst <= B, f"{name} max deviation {worst} <= B = {B} over 20 pairs", time.perf_counter() - t0, 10)


# 3 ----------------------------------------------------------------------------------


@pytest.mark.parametrize("qm_name", ["exp-sum", "counting"])
def test_criterion_03_quasi_isometry(qm_name):
    t0 = time.perf_counter()
    mu, g0 = (hom_qm(F2, {"a": 1}), "a") if qm_name == "exp-sum" else (counting_qm(F2, "ab"), "ab")
    e = build_embedding(F2, integerize(mu, parse_word(F2, g0)), 5)
    pts = [e.psi(w) for w in enumerate_words(F2, 3)]
    rng = random.Random(3)
    pairs = [tuple(rng.sample(pts, 2)) for _ in range(600)]
    gs = list(enumerate_words(F2, 2))[1:11]
    certs = [qi_certificate(e, g, pairs) for g in gs]
    ok = all(c.distortion_d <= e.B + 2 and c.distortion_d2 <= e.B for c in certs) and min(c.checked for c in certs) >= 500
    worst_d = max(c.distortion_d for c in certs)
    worst_d2 = max(c.distortion_d2 for c in certs)
    detail = (
        f"{qm_name} ladder: d distortion {float(worst_d):.6f} <= B+2 = {e.B + 2}, "
        f"d2 distortion {worst_d2} <= B = {e.B}, {len(gs)} elements x {min(c.checked for c in certs)} pairs"
    )
    record(3, "quasi-isometry bound", ok, detail, time.perf_counter() - t0, 30)


# 4 ----------------------------------------------------------------------------------

LADDERS = {
    "f2-exp-sum": (lambda: hom_qm(F2, {"a": 1}), F2, "a", ["a", "ab", "aba", "b", "aab"]),
    "f2-counting": (lambda: counting_qm(F2, "ab"), F2, "ab", ["ab", "aab", "abb", "b", "abaB"]),
    "psl2z": (rademacher_qm, PSL2Z, "S R", ["S R", "S R^2", "R", "S R S R^2", "S R S R S R^2"]),
}


@pytest.mark.parametrize("name", list(LADDERS))
def test_criterion_04_reconstruction(name):
    t0 = time.perf_counter()
    make, p, g0, elements = LADDERS[name]
    mu = make()
    gs = [parse_word(p, x) for x in elements]
    n = 64
    e = build_embedding(p, integerize(mu, parse_word(p, g0)), 4, orbit_words(gs, n))
    square = square_via_matrix if p.is_psl2z else None
    ok = True
    parts = []
    for g in gs:
        value = reconstruct_mu(e, g, n)
        hg = homogenize(mu, g, 14, mu.claimed_defect, square=square)
        tol = reconstruction_tolerance(e, n, hg)
        gap = abs(value - hg.value / e.iq.scale)
        ok = ok and gap <= tol
        parts.append(f"{g}: {value} vs {hg.value / e.iq.scale} (gap {gap} <= {tol})")
    record(4, f"reconstruction ({name})", ok, "; ".join(parts), time.perf_counter() - t0, 30)


# 5 ----------------------------------------------------------------------------------


def test_criterion_05_projective_injectivity():
    t0 = time.perf_counter()
    a = parse_word(F2, "a")
    extra = orbit_words([a], 200)
    e_a = build_embedding(F2, integerize(counting_qm(F2, "a"), a), 3, extra)
    e_b = build_embedding(F2, integerize(counting_qm(F2, "b"), parse_word(F2, "b")), 3, extra)
    v = equivalence_test(e_a, e_b, [a], 200, threshold=10)
    ab = parse_word(F2, "ab")
    mu = counting_qm(F2, "ab")
    extra = orbit_words([ab, a], 60)
    e1 = build_embedding(F2, integerize(mu, ab), 3, extra)
    e3 = build_embedding(F2, integerize(mu.scaled(3), ab), 3, extra)
    same = equivalence_test(e1, e3, [ab, a], 60)
    ok = v.status == "inequivalent" and v.witness is not None and v.witness[1] <= 200
    ok = ok and all(d == 0 for _, _, d in same.trace)
    detail = f"count(a) vs count(b): {v.status} at g={v.witness[0]}, n={v.witness[1]}; mu vs 3mu: max delta {same.max_delta}"
    record(5, "projective injectivity", ok, detail, time.perf_counter() - t0, 10)


# 6 ----------------------------------------------------------------------------------


def _lift_setups():
    bent = CircleLift.pl([(F(0), F(1, 4)), (F(1, 4), F(1, 3)), (F(1, 2), F(3, 4))])
    conj = CircleLift.pl([(F(0), F(1, 10)), (F(1, 3), F(1, 2))])
    return [
        ("rotation 1/3, grid 3", [CircleLift.rotation(F(1, 3))], 3),
        ("rotation 5/7, grid 7", [CircleLift.rotation(F(5, 7))], 7),
        ("bent PL, grid 4", [bent], 4),
        ("two lifts, grid 12", [CircleLift.rotation(F(1, 4)), conj], 12),
    ]


def test_criterion_06_translation_number():
    t0 = time.perf_counter()
    notes = []
    # (i) width certificates with C0 = 1
    ok_i = True
    for label, lifts, grid in _lift_setups():
        p = Presentation.free(len(lifts))
        mta = MonotoneTripleAction(lift_action(p, lifts), line_triple(grid=grid))
        ok_i = ok_i and all(width_theorem_check(mta, g).width <= 1 for g in enumerate_words(p, 2))
    notes.append(f"(i) width <= 1: {ok_i}")
    # (ii) rotations
    rng = random.Random(6)
    fracs = [F(rng.randint(-300, 300), rng.randint(1, 100)) for _ in range(20)]
    ok_ii = all(translation_number(CircleLift.rotation(x)).value == x and translation_number(CircleLift.rotation(x)).error_bound == 0 for x in fracs)
    notes.append(f"(ii) 20 rotations exact: {ok_ii}")
    # (iii) pipeline mu(g^n)/n against the extended lift
    n = 1024
    ok_iii = True
    worst = F(0)
    for label, lifts, grid in _lift_setups()[:3]:
        cfg_lifts = {"a": lifts[0].to_json()}
        setup = setup_from_config({"kind": "circle-lift", "lifts": cfg_lifts, "grid": grid})
        qm = theorem3_pipeline(setup.action, setup.triple, setup.budgets, setup.basepoint)
        a = parse_word(Z, "a")
        est = qm(a**n) / n
        tau = translation_number(extend_to_line(setup.extra["monotone"], a)).value
        worst = max(worst, abs(est - tau))
        ok_iii = ok_iii and abs(est - tau) <= F(1, n)
    notes.append(f"(iii) |mu(g^1024)/1024 - tau| = {float(worst):.2e} <= 1/1024: {ok_iii}")
    # (iv) exact homogeneity
    c = CircleLift.pl([(F(0), F(1, 10)), (F(1, 3), F(1, 2))])
    fs = [CircleLift.rotation(F(3, 7)), c @ CircleLift.rotation(F(2, 5)) @ c.inverse()]
    ok_iv = True
    for f in fs:
        for k in (2, 3, -2):
            v = tau_homogeneity_check(f, k)
            ok_iv = ok_iv and v.observed == 0 and translation_number(f.power(k)).exact
    notes.append(f"(iv) tau(f^k) = k tau(f) exactly: {ok_iv}")
    record(6, "translation number", ok_i and ok_ii and ok_iii and ok_iv, "; ".join(notes), time.perf_counter() - t0, 30)


# 7 ----------------------------------------------------------------------------------


def test_criterion_07_homogenization_soundness():
    t0 = time.perf_counter()
    ok = True
    hom = hom_qm(F2, {"a": 2, "b": -1})
    words = [w for w in enumerate_words(F2, 3) if not w.is_identity()]
    for g in words:
        r = homogenize(hom, g, 14)
        ok = ok and all(v == hom(g) for v in r.sequence) and r.value == hom(g)
    checked = 0
    worst = F(0)
    cases = [(counting_qm(F2, pat), F2, None) for pat in ("ab", "aab", "abAB")]
    cases.append((rademacher_qm(), PSL2Z, square_via_matrix))
    for qm, p, square in cases:
        D = qm.claimed_defect
        for g in list(enumerate_words(p, 2))[1:]:
            r = homogenize(qm, g, 14, D, square=square)
            for k in range(1, len(r.sequence)):
                gap = abs(r.sequence[k] - r.sequence[k - 1])
                worst = max(worst, gap * 2**k / D)
                ok = ok and gap <= D / 2**k
                checked += 1
    detail = f"homomorphisms exact on {len(words)} words; {checked} doubling gaps, worst gap*2^k/D = {worst}"
    record(7, "homogenization soundness", ok, detail, time.perf_counter() - t0, 30)


# 8 ----------------------------------------------------------------------------------


def test_criterion_08_torsion():
    t0 = time.perf_counter()
    hs = {x: homogenized_rademacher(x) for x in ("S", "R", "R^2")}
    ok = all(r.value == 0 and r.error_bound == 0 and r.torsion for r in hs.values())
    e = build_psl2z_ladder(6)
    widths = []
    for text in ("S", "R", "R^2", "R S R^2", "S R S"):
        g = parse_word(PSL2Z, text)
        for start in enumerate_words(PSL2Z, 2):
            x = start
            levels = [e.psi(x).level]
            for _ in range(6):
                x = g * x
                levels.append(e.psi(x).level)
            widths.append(max(levels) - min(levels))
    ok = ok and max(widths) <= e.B
    detail = f"mu_h(S) = mu_h(R) = mu_h(R^2) = 0 exactly; torsion orbit window {max(widths)} <= B = {e.B}"
    record(8, "torsion vanishing", ok, detail, time.perf_counter() - t0, 5)


# 9 ----------------------------------------------------------------------------------


def test_criterion_09_path_integral_toy():
    t0 = time.perf_counter()
    ok = True
    Za = parse_word(Z, "a")
    shift = lift_action(Z, [CircleLift.rotation(1)])
    for cfg in (
        {"kind": "constant", "value": 1},
        {"kind": "step", "pieces": [[0, "1/2"], ["1/2", "3/2"]]},
        {"kind": "pl", "points": [[0, 0], ["1/2", 2]]},
    ):
        h0 = Density.from_config(cfg)
        t = density_triple(h0, 8)
        rep = verify_triple(t, 3)
        in_range = all(0 <= t.h(x) < 1 for x in t.domain_points(0, 3))
        mus = {mu_from_action(shift, t, x, Za) for x in t.domain_points(0, 3)}
        ok = ok and h0.period_integral == 1 and rep.ok and rep.max_b == 0 and in_range and mus == {1}
    record(9, "path-integral toy", ok, "3 densities: verify_triple passes, b = 0, h(F_0) in [0,1), mu(shift) = 1", time.perf_counter() - t0, 5)


# 10 ---------------------------------------------------------------------------------


def test_criterion_10_negative_controls():
    t0 = time.perf_counter()
    t = integer_line_triple(lambda x: F(x) ** 2)
    act = translation_action()
    growth = []
    witness = None
    for radius in (2, 4, 8, 16):
        pts = [F(k) for k in range(-radius, radius + 1)]
        rep = check_root_condition(act, t, [(x, y) for x in pts for y in pts], list(enumerate_words(Z, radius)))
        growth.append(rep.observed)
        witness = rep.witness
    ok_sq = growth == sorted(growth) and len(set(growth)) == len(growth) and witness is not None

    grid = line_triple(grid=2)
    reverse = GActionOnTriple(Z, lambda g, x: -x if sum(e for _, e in g.units) % 2 else x)
    rep_a = check_monotone_conditions(MonotoneTripleAction(reverse, grid), [F(0), F(1, 2), F(1)], [parse_word(Z, "a")])
    ok_a = rep_a.failed("a") and rep_a.failures[0].witness is not None

    bumped = line_triple(grid=2, h=lambda x: x + F(1, 4) if x == 1 else x)
    rot = lift_action(Z, [CircleLift.rotation(F(1, 2))])
    rep_c = check_monotone_conditions(MonotoneTripleAction(rot, bumped), [F(0), F(1, 2)], [parse_word(Z, "a")])
    c_fail = [f for f in rep_c.failures if f.axiom == "c"]
    ok_c = bool(c_fail) and c_fail[0].witness is not None

    detail = (
        f"h^2 root constant {[str(x) for x in growth]} (witness {witness}); "
        f"order reversal fails (a) at {rep_a.failures[0].witness}; b=1/4 fails (c) at {c_fail[0].witness if c_fail else None}"
    )
    record(10, "negative controls", ok_sq and ok_a and ok_c, detail, time.perf_counter() - t0, 10)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

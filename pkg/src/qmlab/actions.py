"""Built-in action families and the end-to-end quasimorphism pipeline run.

Each family bundles a triple, a group action on it, sampling budgets and a
basepoint. :func:`run_pipeline` checks the hypotheses, builds the
quasimorphism and then validates its claimed defect independently by
exhaustive search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .circle import CircleLift, Density, MonotoneTripleAction, density_triple, lift_action, line_triple
from .ladder import LadderEmbedding, build_embedding, find_witness, integerize, ladder_action, ladder_triple
from .psl2z import build_psl2z_ladder
from .qmcore import Quasimorphism, defect_search, frac_str, qm_from_config
from .triple import (
    GActionOnTriple,
    HypothesisViolation,
    PipelineBudgets,
    Triple,
    check_root_condition,
    integer_line_triple,
    theorem3_pipeline,
    translation_action,
)
from .words import PSL2Z, DomainError, Presentation, Word, enumerate_words, parse_word


@dataclass
class ActionSetup:
    name: str
    action: GActionOnTriple
    triple: Triple
    budgets: PipelineBudgets
    basepoint: Any
    validate_length: int
    extra: dict = field(default_factory=dict)


def trivial_z_setup() -> ActionSetup:
    p = Presentation.free(1)
    t = integer_line_triple()
    budgets = PipelineBudgets(truncation=3, g_sample=list(enumerate_words(p, 3)), C0=Fraction(0))
    return ActionSetup("trivial-z", translation_action(p), t, budgets, Fraction(0), 6)


def _ladder_setup(name: str, e: LadderEmbedding, sample_length: int, validate_length: int) -> ActionSetup:
    p = e.group
    points = [w for w in enumerate_words(p, sample_length)]
    budgets = PipelineBudgets(
        truncation=2,
        g_sample=list(enumerate_words(p, 2)),
        point_sample=points,
        alphas=(-2, -1, 1, 2),
        C0=e.B,
    )
    return ActionSetup(
        name, ladder_action(e), ladder_triple(e), budgets, p.identity(), validate_length, {"embedding": e}
    )


def ladder_setup(
    p: Presentation,
    qm: Quasimorphism,
    witness: Word | None = None,
    max_length: int = 6,
    validate_length: int = 6,
) -> ActionSetup:
    g0 = witness if witness is not None else find_witness(qm, p)
    e = build_embedding(p, integerize(qm, g0), max_length)
    return _ladder_setup("ladder", e, min(3, max_length - 2), validate_length)


def psl2z_ladder_setup(max_length: int = 8, validate_length: int = 6) -> ActionSetup:
    e = build_psl2z_ladder(max_length)
    return _ladder_setup("psl2z-ladder", e, 4, validate_length)


def circle_setup(
    p: Presentation,
    lifts: list[CircleLift],
    base_points=None,
    grid: int | None = None,
    density: Density | None = None,
    validate_length: int = 4,
) -> ActionSetup:
    if density is not None:
        t = density_triple(density, grid or 8)
    else:
        t = line_triple(base_points=base_points, grid=grid if base_points is None else None, label="circle")
    act = lift_action(p, lifts)
    budgets = PipelineBudgets(truncation=2, g_sample=list(enumerate_words(p, 2)), C0=Fraction(1))
    basepoint = t.domain_points(0, 1)[0]
    return ActionSetup(
        "circle-lift", act, t, budgets, basepoint, validate_length, {"monotone": MonotoneTripleAction(act, t)}
    )


def setup_from_config(cfg: dict | str) -> ActionSetup:
    """Descriptors: ``"trivial-z"``, ``{"kind":"ladder","group":..,"qm":..,"witness":..}``,
    ``{"kind":"psl2z-ladder"}``, ``{"kind":"circle-lift","group":..,"lifts":{..},"grid":N}``."""
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    kind = cfg.get("kind")
    if kind == "trivial-z":
        return trivial_z_setup()
    if kind == "ladder":
        p = Presentation.from_config(cfg.get("group", {"kind": "free", "rank": 2}))
        qm = qm_from_config(p, cfg.get("qm", {"kind": "counting", "pattern": "ab"}))
        w = cfg.get("witness")
        return ladder_setup(
            p,
            qm,
            parse_word(p, w) if w else None,
            int(cfg.get("max_length", 6)),
            int(cfg.get("validate_length", 6)),
        )
    if kind == "psl2z-ladder":
        return psl2z_ladder_setup(int(cfg.get("max_length", 8)), int(cfg.get("validate_length", 6)))
    if kind == "circle-lift":
        p = Presentation.from_config(cfg.get("group", {"kind": "free", "rank": 1}))
        lifts_cfg = cfg.get("lifts", {p.names[0]: {"kind": "rotation", "angle": "1/3"}})
        lifts = [CircleLift.from_config(lifts_cfg[n]) for n in p.names]
        density = Density.from_config(cfg["density"]) if "density" in cfg else None
        pts = [Fraction(x) for x in cfg["points"]] if "points" in cfg else None
        return circle_setup(p, lifts, pts, cfg.get("grid", 3 if pts is None else None), density,
                            int(cfg.get("validate_length", 4)))
    raise DomainError(f"unknown action kind {kind!r}")


@dataclass
class PipelineRun:
    setup: ActionSetup
    qm: Quasimorphism | None
    observed_defect: Fraction | None
    defect_witness: tuple | None
    observed_root: Fraction | None
    root_witness: tuple | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return (
            self.error is None
            and self.observed_defect <= self.qm.claimed_defect
            and self.observed_root <= self.qm.claimed_defect
        )

    def to_json(self) -> dict:
        out: dict = {
            "action": self.setup.name,
            "verdict": "pass" if self.ok else "fail",
            "budgets": {
                "truncation": self.setup.budgets.truncation,
                "g_sample": len(self.setup.budgets.g_sample),
                "validate_length": self.setup.validate_length,
            },
        }
        if self.error is not None:
            out["error"] = self.error
            return out
        cert = self.qm.certificate
        out.update(
            {
                "bound": cert.bound_formula,
                "claimed_defect": frac_str(self.qm.claimed_defect),
                "observed_defect": frac_str(self.observed_defect),
                "defect_witness": None if self.defect_witness is None else [str(w) for w in self.defect_witness],
                "observed_root_B": frac_str(self.observed_root),
                "root_witness": None if self.root_witness is None else [str(w) for w in self.root_witness],
                "certificate": cert.to_json(),
            }
        )
        return out


def root_sample_pairs(setup: ActionSetup, n_points: int = 24) -> list[tuple]:
    pts = list(setup.budgets.point_sample) or list(setup.triple.domain_points(0, setup.budgets.truncation))
    more = []
    for k in (-1, 1):
        try:
            more += list(setup.triple.domain_points(k, setup.budgets.truncation))[:4]
        except Exception:
            pass
    pts = (pts + more)[:n_points]
    return list(itertools.combinations(pts, 2))


def run_pipeline(setup: ActionSetup, validate_length: int | None = None) -> PipelineRun:
    L = setup.validate_length if validate_length is None else validate_length
    try:
        qm = theorem3_pipeline(setup.action, setup.triple, setup.budgets, setup.basepoint)
    except HypothesisViolation as exc:
        return PipelineRun(setup, None, None, None, None, None, str(exc))
    defect, witness = defect_search(qm, setup.action.group, L)
    root = check_root_condition(setup.action, setup.triple, root_sample_pairs(setup), setup.budgets.g_sample)
    return PipelineRun(setup, qm, defect, witness, root.observed, root.witness)


PSL2Z_PRESENTATION = PSL2Z

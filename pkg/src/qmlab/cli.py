"""Command-line entry point.

Every command builds a JSON report (or a CSV table) and exits 0 when all
certified bounds hold, 1 when one is violated and 2 on a usage error. Reports
are written only after the whole computation succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any

from .actions import run_pipeline, setup_from_config
from .circle import CircleLift, Density, density_triple, tau_homogeneity_check, translation_number
from .ladder import (
    build_embedding,
    equivalence_test,
    find_witness,
    integerize,
    orbit,
    orbit_words,
    reconstruct_mu,
    reconstruction_tolerance,
)
from .psl2z import homogenized_rademacher, rademacher_counting, rademacher_defect, rademacher_qm, square_via_matrix
from .qmcore import DEFAULT_DOUBLINGS, Quasimorphism, defect_search, frac_str, homogenize, qm_from_config
from .triple import HypothesisViolation, OutOfTruncation, verify_triple
from .words import PSL2Z, DomainError, IntMatrix, Presentation, Word, matrix_of, parse_word, word_of

COMMANDS = ("verify-triple", "defect", "homog", "embed", "orbit", "equiv", "rotnum", "psl2z", "pipeline")
TABLE_COMMANDS = ("embed", "orbit")
BUDGET_KEYS = ("max_length", "doublings", "iters", "truncation")


class UsageError(Exception):
    pass


# --- descriptor parsing -----------------------------------------------------


def _json_or_text(text: str | None):
    if text is None:
        return None
    s = text.strip()
    if s[:1] in "{[":
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed JSON argument: {exc}") from None
    return s


def group_from(desc) -> Presentation:
    """``F2``, ``psl2z`` or a presentation config object."""
    if desc is None:
        return Presentation.free(2)
    if isinstance(desc, str):
        d = desc.lower()
        if d in ("psl2z", "z2*z3"):
            return PSL2Z
        if d.startswith("f") and d[1:].isdigit():
            return Presentation.free(int(d[1:]))
        raise UsageError(f"unknown group {desc!r}")
    return Presentation.from_config(desc)


def qm_from(p: Presentation, desc) -> Quasimorphism:
    """``count:ab``, ``hom:a=1,b=-1``, ``rademacher`` or a config object."""
    if desc is None:
        desc = "rademacher" if p.is_psl2z else "count:ab"
    if isinstance(desc, str):
        kind, _, rest = desc.partition(":")
        if kind == "count":
            desc = {"kind": "counting", "pattern": rest}
        elif kind == "hom":
            weights = dict(item.split("=", 1) for item in rest.split(",") if item)
            desc = {"kind": "hom", "weights": weights}
        elif kind == "rademacher":
            desc = {"kind": "rademacher"}
        else:
            raise UsageError(f"unknown quasimorphism {desc!r}")
    return qm_from_config(p, desc)


def lift_from(desc) -> CircleLift:
    """``rot:1/3`` or a lift config object."""
    if desc is None:
        raise UsageError("rotnum needs --lift")
    if isinstance(desc, str):
        kind, _, rest = desc.partition(":")
        if kind != "rot":
            raise UsageError(f"unknown lift {desc!r}")
        return CircleLift.rotation(Fraction(rest))
    return CircleLift.from_config(desc)


def _word(p: Presentation, text) -> Word:
    if text is None:
        raise UsageError("this command needs --word")
    return parse_word(p, str(text))


def _threads() -> dict:
    raw = os.environ.get("QMLAB_THREADS")
    if raw is None:
        return {"requested": None, "used": 1}
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QMLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("QMLAB_THREADS must be a positive integer")
    return {"requested": n, "used": 1}


# --- commands ---------------------------------------------------------------
# Each returns (report, table, ok); table is a list of rows (header first) or None.


def _homog(qm: Quasimorphism, p: Presentation, g: Word, doublings: int):
    square = square_via_matrix if p.is_psl2z else None
    return homogenize(qm, g, doublings, qm.claimed_defect, square=square)


def cmd_defect(cfg: dict):
    p = group_from(cfg.get("group"))
    qm = qm_from(p, cfg.get("qm"))
    L = cfg["budgets"].get("max_length", 4)
    observed, witness = defect_search(qm, p, L)
    claimed = qm.claimed_defect
    ok = claimed is None or observed <= claimed
    report = {
        "qm": qm.label,
        "bound": None if claimed is None else f"D = {frac_str(claimed)}",
        "claimed_defect": frac_str(claimed),
        "observed_defect": frac_str(observed),
        "witness": None if witness is None else [str(w) for w in witness],
    }
    return report, None, ok


def cmd_homog(cfg: dict):
    p = group_from(cfg.get("group"))
    qm = qm_from(p, cfg.get("qm"))
    g = _word(p, cfg.get("word"))
    n = cfg["budgets"].get("doublings", DEFAULT_DOUBLINGS)
    if qm.claimed_defect is None:
        raise UsageError("homog needs a quasimorphism with a certified defect")
    res = _homog(qm, p, g, n)
    D = qm.claimed_defect
    rows = [["k", "n", "value", "gap", "allowed"]]
    ok = True
    worst = Fraction(0)
    for k, v in enumerate(res.sequence):
        gap = abs(v - res.sequence[k - 1]) if k else Fraction(0)
        allowed = D / 2**k if k else D
        ok = ok and gap <= allowed
        worst = max(worst, gap - allowed)
        rows.append([k, 2**k, frac_str(v), frac_str(gap), frac_str(allowed)])
    report = {
        "qm": qm.label,
        "word": str(g),
        "bound": f"gap_k <= D/2^k with D = {frac_str(D)}",
        "homogenization": res.to_json(),
        "trace": [dict(zip(rows[0], r)) for r in rows[1:]],
    }
    return report, rows, ok


def _embedding(cfg: dict, extra: list[Word] = (), qm_key: str = "qm"):
    p = group_from(cfg.get("group"))
    qm = qm_from(p, cfg.get(qm_key))
    w = cfg.get("witness")
    g0 = parse_word(p, w) if w else find_witness(qm, p)
    L = cfg["budgets"].get("max_length", 4)
    return build_embedding(p, integerize(qm, g0), L, extra)


def _embedding_json(e) -> dict:
    return {
        "mu": e.iq.base_mu.label,
        "witness_g0": str(e.iq.witness),
        "scale": frac_str(e.iq.scale),
        "scale_error": frac_str(e.iq.scale_error),
        "mu0_defect_bound": frac_str(e.iq.defect_bound),
        "B": frac_str(e.B),
        "B_rule": f"2 * exhaustive mu0 defect over words of length <= {e.B_length}",
        "B_witness": None if e.B_witness is None else [str(w) for w in e.B_witness],
        "level_sizes": {str(k): v for k, v in e.level_sizes().items()},
    }


def cmd_embed(cfg: dict):
    e = _embedding(cfg)
    rows = [["word", "level", "slot"]] + [list(r) for r in e.level_table()]
    report = _embedding_json(e)
    report["table"] = [dict(zip(rows[0], r)) for r in rows[1:]]
    return report, rows, True


def cmd_orbit(cfg: dict):
    p = group_from(cfg.get("group"))
    g = _word(p, cfg.get("word"))
    n = cfg["budgets"].get("iters", 64)
    e = _embedding(cfg, orbit_words([g], n))
    value = reconstruct_mu(e, g, n)
    levels = orbit(e, g, n).levels
    doublings = cfg["budgets"].get("doublings", DEFAULT_DOUBLINGS)
    hg = _homog(e.iq.base_mu, p, g, doublings)
    target = hg.value / e.iq.scale
    tol = reconstruction_tolerance(e, n, hg)
    gap = abs(value - target)
    rows = [["n", "level"]] + [[k, lev] for k, lev in enumerate(levels)]
    report = {
        "word": str(g),
        "embedding": _embedding_json(e),
        "reconstructed": frac_str(value),
        "homogenized_over_scale": frac_str(target),
        "gap": frac_str(gap),
        "bound": f"B/n + 1/n + err/|s| = {frac_str(tol)}",
        "trace": [{"n": k, "level": lev} for k, lev in enumerate(levels)],
    }
    return report, rows, gap <= tol


def cmd_equiv(cfg: dict):
    p = group_from(cfg.get("group"))
    if cfg.get("qm2") is None:
        raise UsageError("equiv needs --qm2")
    words = cfg.get("words") or list(p.names)
    sample = [parse_word(p, w) for w in words]
    n = cfg["budgets"].get("iters", 200)
    extra = orbit_words(sample, n)
    e1 = _embedding(cfg, extra, "qm")
    e2 = _embedding({**cfg, "witness": cfg.get("witness2")}, extra, "qm2")
    v = equivalence_test(e1, e2, sample, n, int(cfg.get("threshold", 10)))
    report = {"embedding_1": _embedding_json(e1), "embedding_2": _embedding_json(e2), **v.to_json()}
    return report, None, True


def cmd_rotnum(cfg: dict):
    f = lift_from(cfg.get("lift"))
    mode = cfg.get("mode", "exact")
    n = cfg["budgets"].get("iters", 1024)
    tn = translation_number(f, mode, n)
    report: dict[str, Any] = {"lift": f.to_json(), "mode": mode, **tn.to_json()}
    ok = True
    k = cfg.get("power")
    if k is not None:
        v = tau_homogeneity_check(f, int(k), mode, n)
        report["homogeneity"] = {
            "k": int(k),
            "observed": frac_str(v.observed),
            "bound": f"err(f^k) + |k|*err(f) = {frac_str(v.allowed)}",
            "ok": v.ok,
        }
        ok = v.ok
    return report, None, ok


def _psl2z_element(text: str) -> Word:
    s = str(text).strip()
    if s.startswith("[") or s.count(",") == 3:
        nums = json.loads(s) if s.startswith("[") else [int(x) for x in s.split(",")]
        flat = [int(x) for row in nums for x in (row if isinstance(row, list) else [row])]
        if len(flat) != 4:
            raise UsageError("a matrix needs four entries")
        return word_of(IntMatrix.from_rows([flat[:2], flat[2:]]))
    return parse_word(PSL2Z, s)


def cmd_psl2z(cfg: dict):
    op = cfg.get("op")
    if op == "count":
        if cfg.get("word") is None:
            raise UsageError("psl2z count needs --word")
        w = _psl2z_element(cfg["word"])
        m = matrix_of(w)
        report = {"op": op, "word": str(w), "matrix": m.rows(), "count": rademacher_counting(w)}
        return report, None, True
    if op == "defect":
        L = cfg["budgets"].get("max_length", 6)
        if L < 2:
            raise UsageError("max_length must be at least 2")
        observed = rademacher_defect(L)
        claimed = rademacher_qm().claimed_defect
        report = {
            "op": op,
            "bound": f"D = {frac_str(claimed)}",
            "claimed_defect": frac_str(claimed),
            "observed_defect": frac_str(observed),
        }
        return report, None, observed <= claimed
    if op == "homog":
        if cfg.get("word") is None:
            raise UsageError("psl2z homog needs --word")
        w = _psl2z_element(cfg["word"])
        res = homogenized_rademacher(w, cfg["budgets"].get("doublings", DEFAULT_DOUBLINGS))
        report = {"op": op, "word": str(w), **res.to_json(), "sequence": [frac_str(v) for v in res.sequence]}
        return report, None, True
    raise UsageError("psl2z needs an op: count, defect or homog")


def cmd_pipeline(cfg: dict):
    desc = cfg.get("action")
    if desc is None:
        raise UsageError("pipeline needs --action")
    setup = setup_from_config(desc)
    L = cfg["budgets"].get("max_length")
    run = run_pipeline(setup, L)
    return run.to_json(), None, run.ok


def _triple_from(cfg: dict):
    if cfg.get("density") is not None:
        return density_triple(Density.from_config(cfg["density"]), int(cfg.get("grid", 8)))
    desc = cfg.get("action")
    if desc is None:
        raise UsageError("verify-triple needs --action or --density")
    return setup_from_config(desc).triple


def cmd_verify_triple(cfg: dict):
    t = _triple_from(cfg)
    trunc = cfg["budgets"].get("truncation", 3)
    rep = verify_triple(t, trunc)
    out = rep.to_json()
    out["label"] = t.label
    out["bound"] = f"|b| <= M0 = {frac_str(rep.M0)}, domain width <= 1+2*M0"
    return out, None, rep.ok


HANDLERS = {
    "verify-triple": cmd_verify_triple,
    "defect": cmd_defect,
    "homog": cmd_homog,
    "embed": cmd_embed,
    "orbit": cmd_orbit,
    "equiv": cmd_equiv,
    "rotnum": cmd_rotnum,
    "psl2z": cmd_psl2z,
    "pipeline": cmd_pipeline,
}


# --- argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def globals_(parser, default):
        parser.add_argument("--config", default=default, help="JSON file with a run configuration")
        parser.add_argument("--output", default=default, help="write the report here instead of stdout")
        parser.add_argument("--format", default=default, choices=("json", "csv"))

    ap = argparse.ArgumentParser(prog="qmlab", description="Certified quasimorphism computations.")
    globals_(ap, None)
    # the global flags are accepted after the command too, without clobbering earlier ones
    common = argparse.ArgumentParser(add_help=False)
    globals_(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command")

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    def budget(sp, *names):
        for name in names:
            sp.add_argument("--" + name.replace("_", "-"), dest=name, type=int)

    sp = add("verify-triple", help="check the triple axioms")
    sp.add_argument("--action")
    sp.add_argument("--density")
    sp.add_argument("--grid", type=int)
    budget(sp, "truncation")

    sp = add("defect", help="exhaustive defect search")
    sp.add_argument("--group")
    sp.add_argument("--qm")
    budget(sp, "max_length")

    sp = add("homog", help="homogenize along doublings")
    sp.add_argument("--group")
    sp.add_argument("--qm")
    sp.add_argument("--word")
    budget(sp, "doublings")

    for name, helptext in (("embed", "ladder level table"), ("orbit", "orbit levels and reconstruction")):
        sp = add(name, help=helptext)
        sp.add_argument("--group")
        sp.add_argument("--qm")
        sp.add_argument("--witness")
        budget(sp, "max_length")
        if name == "orbit":
            sp.add_argument("--word")
            budget(sp, "iters", "doublings")

    sp = add("equiv", help="compare two ladder embeddings")
    sp.add_argument("--group")
    sp.add_argument("--qm")
    sp.add_argument("--qm2")
    sp.add_argument("--witness")
    sp.add_argument("--witness2")
    sp.add_argument("--words", nargs="+")
    sp.add_argument("--threshold", type=int)
    budget(sp, "max_length", "iters")

    sp = add("rotnum", help="translation number of a lift")
    sp.add_argument("--lift")
    sp.add_argument("--mode", choices=("exact", "iter"))
    sp.add_argument("--power", type=int)
    budget(sp, "iters")

    sp = add("psl2z", help="the counting quasimorphism on PSL(2,Z)")
    sp.add_argument("op", nargs="?", choices=("count", "defect", "homog"))
    sp.add_argument("--word", help="normal form like 'S R^2' or a matrix 'a,b,c,d'")
    budget(sp, "max_length", "doublings")

    sp = add("pipeline", help="run the full quasimorphism pipeline on an action")
    sp.add_argument("--action")
    budget(sp, "max_length")
    return ap


_JSON_KEYS = ("group", "qm", "qm2", "action", "lift", "density")


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge the config file with flag overrides and validate budgets."""
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed JSON config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    budgets = dict(cfg.get("budgets") or {})
    output = dict(cfg.get("output") or {})
    for key, value in vars(args).items():
        if value is None or key in ("config", "output", "format"):
            continue
        if key in BUDGET_KEYS:
            budgets[key] = value
        elif key in _JSON_KEYS:
            cfg[key] = _json_or_text(value)
        else:
            cfg[key] = value
    if args.output:
        output["path"] = args.output
    if args.format:
        output["format"] = args.format
    command = cfg.get("command")
    if command not in COMMANDS:
        raise UsageError(f"unknown or missing command {command!r}")
    for k, v in budgets.items():
        if k not in BUDGET_KEYS:
            raise UsageError(f"unknown budget {k!r}")
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise UsageError(f"budget {k} must be a positive integer")
    output.setdefault("format", "csv" if command in TABLE_COMMANDS else "json")
    if output["format"] not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    cfg["budgets"] = budgets
    cfg["output"] = output
    return cfg


def _flatten(report: dict) -> list[list]:
    rows = [["key", "value"]]
    for k, v in report.items():
        if isinstance(v, (dict, list)):
            continue
        rows.append([k, v])
    return rows


def render(report: dict, table, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=str) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(table if table is not None else _flatten(report))
    return buf.getvalue()


def run(cfg: dict) -> tuple[int, str]:
    """Execute a resolved config; returns (exit status, rendered report)."""
    threads = _threads()
    command = cfg["command"]
    try:
        report, table, ok = HANDLERS[command](cfg)
    except HypothesisViolation as exc:
        report, table, ok = {"error": str(exc)}, None, False
    except OutOfTruncation as exc:
        raise UsageError(f"{exc}; raise max_length") from None
    except (DomainError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    header = {
        "command": command,
        "verdict": "pass" if ok else "fail",
        "sample_certified": True,
        "budgets": {**cfg["budgets"], "threads": threads},
    }
    if isinstance(report.get("budgets"), dict):
        header["budgets"] = {**report.pop("budgets"), **header["budgets"]}
    full = {**header, **report}
    return (0 if ok else 1), render(full, table, cfg["output"]["format"])


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        status, text = run(cfg)
    except UsageError as exc:
        print(f"qmlab: error: {exc}", file=sys.stderr)
        return 2
    path = cfg["output"].get("path")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: audit, bounds, simulate, verify.

Exit codes: 0 success, 1 usage or input error, 2 verification violation,
3 no applicable bound (audit).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bounds as bd
from .errors import EmpiricalEstimateError, WeakExpandError
from .expansion import (MISTAKES, NON_MISTAKES, OracleSample, default_epsilon,
                        empirical_expansion, family_expansion_masks, family_masks,
                        load_oracle_pairs, load_sample)
from .graph import build_graph, dump_edges, load_edges
from .population import dump_population, load_population, load_predictions, partition
from .robustness import robust_mask
from . import testbeds as tb

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_NOT_APPLICABLE = 0, 1, 2, 3

# (name, family base, family kind, A, B); sets are attributes of ClassPartition
PAIRS = (
    ("bad->good", "good", NON_MISTAKES, "bad", "good"),
    ("good->T", "T", MISTAKES, "good", "T"),
    ("bad->T", "T", NON_MISTAKES, "bad", "T"),
    ("good->bad", "bad", MISTAKES, "good", "bad"),
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- audit

def run_audit(args) -> tuple[dict, int]:
    if not args.population or not args.predictions:
        raise UsageError("audit needs --population and at least one --predictions file")
    empirical = args.oracle is not None
    if not empirical and not args.edges:
        raise UsageError("audit needs --edges (exact mode) or --oracle (empirical mode)")
    if args.strict_robustness and not args.edges:
        raise UsageError("--strict-robustness: robust masses need the edge file; refusing")
    pop = load_population(args.population)
    g = build_graph(pop, load_edges(args.edges)) if args.edges else None
    preds = [load_predictions(p, pop) for p in args.predictions]
    H = np.stack([pop.labels_of(f) for f in preds])
    eta, q = args.eta, args.q
    if g is None and eta != 0.0:
        raise UsageError("eta > 0 needs --edges")
    rob = robust_mask(g, H, eta) if g is not None else np.ones(H.shape, dtype=bool)
    oracle = None
    if empirical:
        if not (args.sample_a and args.sample_b):
            raise UsageError("empirical mode needs --sample-a and --sample-b")
        oracle = (load_oracle_pairs(args.oracle), load_sample(args.sample_a),
                  load_sample(args.sample_b))
    m = pop.mass
    part = partition(pop)
    classes = args.classes if args.classes is not None else range(pop.num_classes)
    out_classes = []
    n_applicable = 0
    for i in classes:
        if not 0 <= i < pop.num_classes:
            raise UsageError(f"class {i} out of range")
        cp = part[i]
        pS, pT = float(m[cp.S].sum()), float(m[cp.T].sum())
        row = {"label": int(i), "alpha": cp.alpha, "p_S": pS, "p_T": pT,
               "usable": cp.usable(), "diagnostic": cp.diagnostic()}
        off = H != pop.weak
        wrong = H != pop.gold
        row["err_weak"] = _worst(off, cp.S, m)
        row["nonrobust_S"] = _worst(~rob, cp.S, m)
        row["nonrobust_T"] = _worst(~rob, cp.T, m)
        row["joint"] = _worst(off | ~rob, cp.S, m)
        row["true_error_S"] = _worst(wrong, cp.S, m)
        row["true_error_T"] = _worst(wrong, cp.T, m)
        exps = {}
        for name, base, kind, A, B in PAIRS:
            a, b = getattr(cp, A), getattr(cp, B)
            if m[a].sum() <= 0 or m[b].sum() <= 0:
                exps[name] = {"c": None, "note": "empty set"}
                continue
            if g is not None:
                fam = family_masks(g, b, H, eta, kind)
            else:
                fam = b & (wrong if kind == MISTAKES else ~wrong)
            if oracle is None:
                res = family_expansion_masks(g, fam, a, b, q, eta)
                exps[name] = ({"c": None, "note": "no set above q"} if res is None else
                              {"c": res[0], "upper": res[1], "witness_file": res[2],
                               "mode": "exact" if eta == 0 else "robust-bracket"})
            else:
                exps[name] = _empirical(pop, oracle, fam, a, b, q, args.delta)
        row["expansion"] = exps
        nr_S = row["nonrobust_S"] if (g is not None) else None
        nr_T = row["nonrobust_T"] if (g is not None) else None
        reports = {}
        if cp.usable() and pS > 0:
            e = row["err_weak"]
            reports[bd.PLC_MAIN] = _guard(lambda: bd.plc_bound(
                _need(exps["bad->good"]), q, cp.alpha, e, nr_S, gate="main",
                joint_mass=row["joint"] if g is not None else None,
                strict=args.strict_robustness))
            reports[bd.WEI_PLC] = _guard(lambda: bd.wei_plc_bound(
                _need(exps["good->bad"]), q, cp.alpha, e, nr_S,
                joint_mass=row["joint"] if g is not None else None,
                strict=args.strict_robustness))
            if pT > 0:
                reports[bd.COVERAGE_MAIN] = _guard(lambda: bd.coverage_bound(
                    _need(exps["good->T"]), _need(exps["bad->T"]), q, cp.alpha, e, nr_T,
                    strict=args.strict_robustness))
                reports[bd.COVERAGE_WEAK] = _guard(lambda: bd.coverage_bound_weak(
                    _need(exps["good->T"]), q, cp.alpha, e, nr_T,
                    strict=args.strict_robustness))
        row["bounds"] = reports
        n_applicable += sum(1 for r in reports.values() if r["applicable"])
        out_classes.append(row)
    report = {"command": "audit", "mode": "empirical" if oracle else "exact",
              "eta": eta, "q": q, "prediction_files": list(args.predictions),
              "classes": out_classes, "applicable_count": n_applicable}
    return report, EXIT_OK if n_applicable else EXIT_NOT_APPLICABLE


def _worst(event, S, m):
    p = m[S].sum()
    if p <= 0:
        return None
    return float(((event & S) @ m / p).max())


class _NoExpansion(Exception):
    pass


def _need(entry):
    if entry.get("c") is None:
        raise _NoExpansion(entry.get("note", "expansion unavailable"))
    return entry["c"]


def _guard(fn) -> dict:
    try:
        return fn().to_dict()
    except _NoExpansion as exc:
        return {"applicable": False, "value": None, "reason": str(exc)}
    except WeakExpandError as exc:
        return {"applicable": False, "value": None, "reason": str(exc)}


def _empirical(pop, oracle, fam, a, b, q, delta):
    pairs, sample_a, sample_b = oracle
    a_ids, b_ids = pop.to_set(a), pop.to_set(b)
    sa = tuple(x for x in sample_a if x in a_ids)
    sb = tuple(x for x in sample_b if x in b_ids)
    if not sa or not sb:
        return {"c": None, "note": "no sampled points in A or B"}
    os_ = OracleSample(sa, sb, {x: pairs[x] for x in sa if x in pairs})
    eps = default_epsilon(len(sb), delta)
    best = None
    for k, row in enumerate(np.atleast_2d(fam)):
        try:
            c = empirical_expansion(os_, pop.to_set(row), q, eps)
        except EmpiricalEstimateError:
            continue  # no B-sample hits: this set cannot be scored
        if c is not None and (best is None or c < best[0]):
            best = (c, k)
    if best is None:
        return {"c": None, "note": "no set above q - epsilon", "epsilon": eps}
    return {"c": best[0], "witness_file": best[1], "mode": "empirical", "epsilon": eps,
            "n_a": len(sa), "n_b": len(sb)}


# ---------------------------------------------------------------- bounds

_SCALARS = {
    bd.FU_BASELINE: {"p_S": "ps", "alpha": "alpha"},
    bd.WEI_APPLICABILITY: {"coverage": "coverage"},
    bd.PLC_MAIN: {"c": "c", "q": "q", "alpha": "alpha", "err_weak": "err",
                  "nonrobust_mass": "nonrobust", "gate": "gate", "joint_mass": "joint",
                  "strict": "strict_robustness"},
    bd.PLC_SIMPLIFIED: {"c": "c", "q": "q", "alpha": "alpha", "err_weak": "err",
                        "nonrobust_mass": "nonrobust", "delta_param": "delta_param",
                        "joint_mass": "joint", "strict": "strict_robustness"},
    bd.COVERAGE_MAIN: {"c1": "c1", "c2": "c2", "q": "q", "alpha": "alpha",
                       "err_weak": "err", "nonrobust_T": "nonrobust_T",
                       "strict": "strict_robustness"},
    bd.COVERAGE_WEAK: {"c": "c", "q": "q", "alpha": "alpha", "err_weak": "err",
                       "nonrobust_T": "nonrobust_T", "strict": "strict_robustness"},
    bd.WEI_PLC: {"c": "c", "q": "q", "alpha": "alpha", "err_weak": "err",
                 "nonrobust_mass": "nonrobust", "joint_mass": "joint",
                 "strict": "strict_robustness"},
}

_REQUIRED = {
    bd.FU_BASELINE: ("p_S", "alpha"),
    bd.WEI_APPLICABILITY: ("coverage",),
    bd.PLC_MAIN: ("c", "alpha", "err_weak"),
    bd.PLC_SIMPLIFIED: ("c", "alpha", "err_weak"),
    bd.COVERAGE_MAIN: ("c1", "c2", "alpha", "err_weak"),
    bd.COVERAGE_WEAK: ("c", "alpha", "err_weak"),
    bd.WEI_PLC: ("c", "alpha", "err_weak"),
}


def _scalar_kwargs(theorem, args, need_all=True):
    kw = {}
    for param, attr in _SCALARS[theorem].items():
        v = getattr(args, attr, None)
        if v is not None:
            kw[param] = v
    if need_all:
        missing = [p for p in _REQUIRED[theorem] if p not in kw]
        if missing:
            flags = ", ".join("--" + _SCALARS[theorem][p].replace("_", "-") for p in missing)
            raise UsageError(f"{theorem} needs {flags}")
    return kw


def run_bounds(args) -> tuple[dict, int]:
    if not args.theorem:
        raise UsageError("bounds needs at least one --theorem")
    reports = []
    for th in args.theorem:
        if th not in bd.THEOREMS:
            raise UsageError(f"unknown theorem {th!r}")
        kw = _scalar_kwargs(th, args)
        if th in (bd.PLC_MAIN, bd.PLC_SIMPLIFIED, bd.COVERAGE_MAIN, bd.COVERAGE_WEAK,
                  bd.WEI_PLC):
            kw.setdefault("q", 0.0)
        reports.append(bd.evaluate(th, **kw).to_dict())
    return {"command": "bounds", "reports": reports}, EXIT_OK


# ---------------------------------------------------------------- simulate

def run_simulate(args) -> tuple[dict, int]:
    if args.seed is None:
        raise UsageError("simulate needs --seed")
    if args.testbed == "cotraining":
        spec = tb.random_cotraining_spec(args.seed, args.classes_count, args.view1_size,
                                         args.view2_size)
        pop, edges = tb.cotraining_population(spec)
        hyp = tb.HypothesisClassSpec("view2-measurable")
    else:
        alpha = 0.2 if args.alpha is None else args.alpha
        pop, edges = tb.planted_population(
            args.n, args.classes_count, alpha, args.coverage, args.density, args.seed,
            cross_class=args.cross_class, masses=args.masses)
        if len(pop) <= 12:
            hyp = tb.HypothesisClassSpec("all-dichotomies")
        else:
            hyp = tb.HypothesisClassSpec("thresholds-1d", {"flips": True})
    g = build_graph(pop, edges)
    H = tb.hypothesis_matrix(hyp, pop)
    part = partition(pop)
    m = pop.mass
    classes = []
    for cp in part.classes:
        exps = {}
        for name, base, kind, A, B in PAIRS:
            a, b = getattr(cp, A), getattr(cp, B)
            if m[a].sum() <= 0 or m[b].sum() <= 0:
                exps[name] = None
                continue
            res = family_expansion_masks(g, family_masks(g, b, H, 0.0, kind), a, b, 0.0, 0.0)
            exps[name] = None if res is None else res[0]
        classes.append({"label": cp.label, "alpha": cp.alpha,
                        "p_S": float(m[cp.S].sum()), "p_T": float(m[cp.T].sum()),
                        "expansion": exps})
    summary = {"command": "simulate", "testbed": args.testbed, "seed": args.seed,
               "points": len(pop), "edges": g.num_edges,
               "coverage": float(m[pop.covered].sum()), "hypothesis_class": hyp.kind,
               "hypotheses": int(H.shape[0]), "classes": classes}
    if args.testbed == "cotraining":
        summary["all_expansions_one"] = all(
            v is not None and abs(v - 1.0) <= 1e-9
            for c in classes for v in c["expansion"].values())
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "population.jsonl"), "w") as fh:
            dump_population(pop, fh)
        with open(os.path.join(args.out_dir, "edges.tsv"), "w") as fh:
            dump_edges(g, fh)
        summary["files"] = ["population.jsonl", "edges.tsv"]
    return summary, EXIT_OK


# ---------------------------------------------------------------- verify

def run_verify(args) -> tuple[dict, int]:
    theorems = args.theorem or list(tb.VERIFIABLE)
    scalar = args.alpha is not None or args.c is not None or args.c1 is not None
    if scalar:
        reports = []
        for th in theorems:
            reports.append(bd.evaluate(th, **_scalar_kwargs_defaults(th, args)).to_dict())
        return {"command": "verify", "mode": "scalar", "reports": reports}, EXIT_OK
    if args.seed is None:
        raise UsageError("verify needs --seed")
    for th in theorems:
        if th not in tb.VERIFIABLE:
            raise UsageError(f"no soundness harness for {th!r}")
    cfg = tb.SuiteConfig(instances=args.instances, seed=args.seed, n_min=args.n_min,
                         n_max=args.n_max)
    mutate = 0.05 if args.mutate_bounds else 0.0
    results = [tb.verify_suite(th, cfg, mutate=mutate).to_dict() for th in theorems]
    bad = any(r["violations"] for r in results)
    return ({"command": "verify", "mode": "suite", "mutated": bool(args.mutate_bounds),
             "results": results}, EXIT_VIOLATION if bad else EXIT_OK)


def _scalar_kwargs_defaults(th, args):
    """Scalar evaluation for verify: missing err/q default to the exact-fit
    case so that gate checks on (alpha, c) alone still run."""
    kw = _scalar_kwargs(th, args, need_all=False)
    if th in (bd.PLC_MAIN, bd.PLC_SIMPLIFIED, bd.COVERAGE_WEAK, bd.WEI_PLC):
        kw.setdefault("q", 0.0)
        if "alpha" in kw:
            kw.setdefault("err_weak", kw["alpha"])
    missing = [p for p in _REQUIRED[th] if p not in kw]
    if missing:
        raise UsageError(f"{th} needs " + ", ".join(missing))
    return kw


# ---------------------------------------------------------------- rendering

def _fmt(v, nd=4):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.{nd}f}"
    return str(v)


def _grid(header, rows):
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    line = lambda r: "  ".join(str(x).rjust(w) for x, w in zip(r, widths))
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows])


def render_table(report: dict) -> str:
    """Plain-text rendering of a report; formats only, computes nothing."""
    cmd = report["command"]
    if cmd == "audit":
        t1 = [[c["label"], _fmt(c["expansion"]["bad->good"].get("c")), _fmt(c["alpha"]),
               _fmt(c["err_weak"]), _fmt(c["bounds"].get(bd.PLC_MAIN, {}).get("value")),
               _fmt(c["true_error_S"])] for c in report["classes"]]
        t2 = [[c["label"], _fmt(c["expansion"]["good->T"].get("c")),
               _fmt(c["expansion"]["bad->T"].get("c")), _fmt(c["alpha"]),
               _fmt(c["err_weak"]), _fmt(c["bounds"].get(bd.COVERAGE_MAIN, {}).get("value")),
               _fmt(c["true_error_T"])] for c in report["classes"]]
        return ("Covered sets (pseudolabel correction)\n"
                + _grid(["i", "exp", "alpha", "err_weak", "bound", "true_err"], t1)
                + "\n\nUncovered sets (coverage expansion)\n"
                + _grid(["i", "c1", "c2", "alpha", "err_weak", "bound", "true_err"], t2))
    if cmd in ("bounds",) or report.get("mode") == "scalar":
        rows = [[r["theorem"], _fmt(r["applicable"]), _fmt(r["value"]),
                 _fmt(r["clamped"]),
                 "; ".join(p["name"] for p in r["preconditions"] if not p["satisfied"]) or "-"]
                for r in report["reports"]]
        return _grid(["theorem", "applicable", "value", "clamped", "failed"], rows)
    if cmd == "verify":
        rows = [[r["theorem"], r["instances"], r["applicable"], r["vacuous"],
                 len(r["violations"]), _fmt(r["min_slack"], 6)] for r in report["results"]]
        return _grid(["theorem", "checked", "applicable", "vacuous", "violations",
                      "min_slack"], rows)
    if cmd == "simulate":
        rows = [[c["label"], _fmt(c["alpha"]), _fmt(c["p_S"]), _fmt(c["p_T"])]
                + [_fmt(c["expansion"][p[0]]) for p in PAIRS] for c in report["classes"]]
        head = (f"{report['testbed']} seed={report['seed']} points={report['points']} "
                f"edges={report['edges']} coverage={_fmt(report['coverage'])}")
        return head + "\n" + _grid(["i", "alpha", "P(S_i)", "P(T_i)"] + [p[0] for p in PAIRS],
                                   rows)
    raise ValueError(f"unknown report {cmd!r}")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weakexpand", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file mirroring the flags")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "table"), default="json")

    def scalars(sp):
        for name in ("c", "c1", "c2", "q", "alpha", "err", "nonrobust", "nonrobust-T",
                     "ps", "coverage", "joint", "delta-param"):
            sp.add_argument("--" + name, type=float, default=None)
        sp.add_argument("--gate", choices=("main", "headline"), default=None)
        sp.add_argument("--strict-robustness", action="store_true", default=None)

    a = sub.add_parser("audit", help="measure expansion and bounds on a labeled population")
    common(a)
    a.add_argument("--population")
    a.add_argument("--edges")
    a.add_argument("--predictions", nargs="+")
    a.add_argument("--oracle")
    a.add_argument("--sample-a")
    a.add_argument("--sample-b")
    a.add_argument("--eta", type=float, default=0.0)
    a.add_argument("--q", type=float, default=0.0)
    a.add_argument("--delta", type=float, default=0.1)
    a.add_argument("--classes", type=int, nargs="+")
    a.add_argument("--strict-robustness", action="store_true")

    b = sub.add_parser("bounds", help="evaluate bounds on scalar inputs")
    common(b)
    b.add_argument("--theorem", action="append", choices=bd.THEOREMS)
    scalars(b)

    s = sub.add_parser("simulate", help="generate a synthetic population")
    common(s)
    s.add_argument("--testbed", choices=("cotraining", "planted"), default="planted")
    s.add_argument("--seed", type=int)
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--classes-count", type=int, default=2)
    s.add_argument("--alpha", type=float)
    s.add_argument("--coverage", type=float, default=0.5)
    s.add_argument("--density", type=float, default=0.3)
    s.add_argument("--cross-class", action="store_true")
    s.add_argument("--masses", choices=("uniform", "dirichlet"), default="uniform")
    s.add_argument("--view1-size", type=int, default=4)
    s.add_argument("--view2-size", type=int, default=3)
    s.add_argument("--out-dir")

    v = sub.add_parser("verify", help="brute-force soundness suite")
    common(v)
    v.add_argument("--theorem", action="append", choices=bd.THEOREMS)
    v.add_argument("--seed", type=int)
    v.add_argument("--instances", type=int, default=1000)
    v.add_argument("--n-min", type=int, default=5)
    v.add_argument("--n-max", type=int, default=10)
    v.add_argument("--mutate-bounds", action="store_true")
    scalars(v)
    return p


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {act.dest for act in sp._actions}
        unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


RUNNERS = {"audit": run_audit, "bounds": run_bounds, "simulate": run_simulate,
           "verify": run_verify}


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        report, code = RUNNERS[args.command](args)
    except UsageError as exc:
        print(f"weakexpand: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (WeakExpandError, OSError, json.JSONDecodeError) as exc:
        print(f"weakexpand: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = (json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
            if args.format == "json" else render_table(report))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Exit codes: 0 success, 1 domain failure (invalid assumptions, property
violation, non-compliant faulty set), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import trust
from .graphs import AnalysisError, inconsistency_number, witness_report
from .sim import (AttackError, Scenario, ScenarioError, attack_target, attack_witness,
                  check_trace, local_progress_probe, run)
from .trust import ConfigError, TrustAssumptions

OK, DOMAIN, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path: str, check: bool = True) -> TrustAssumptions:
    try:
        return trust.load_config(path, check)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except ConfigError as e:
        raise UsageError(f"{path}: {e}") from None


def _ids(a: TrustAssumptions, labels: str | list[str]) -> frozenset[int]:
    if isinstance(labels, str):
        labels = [x for x in labels.replace(",", " ").split() if x]
    index = {lab: i for i, lab in enumerate(a.labels)}
    try:
        return frozenset(index[x] for x in labels)
    except KeyError as e:
        raise UsageError(f"unknown process label {e.args[0]!r}") from None


def _write_json(path: str | None, doc) -> None:
    if path:
        try:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as e:
            raise UsageError(f"cannot write {path}: {e.strerror}") from None


def cmd_validate(args) -> int:
    a = _load(args.config, check=False)
    problems = trust.validate(a)
    for p in problems:
        print(f"violation: {p}")
    if problems:
        return DOMAIN
    print(f"{args.config}: valid ({a.n} processes, "
          f"{len(a.fault_model.maximal_sets)} maximal faulty sets)")
    return OK


def _analyze(a: TrustAssumptions, args):
    try:
        return inconsistency_number(a, dedup=not getattr(args, "no_dedup", False),
                                    method=getattr(args, "method", "conflict"),
                                    workers=getattr(args, "workers", 1))
    except AnalysisError as e:
        print(f"error: {e}", file=sys.stderr)
        return None


def _print_witness(a: TrustAssumptions, w) -> None:
    print(f"k_max = {w.k_max}")
    print(f"faulty set:      {a.fmt(w.faulty)}")
    print(f"independent set: {a.fmt(w.independent_set)}")
    print("selection:")
    for p, q in w.selection.choice:
        print(f"  {a.label(p)} -> {a.fmt(q)}")
    st = w.stats
    print(f"search: method={st.method} dedup={st.dedup} faulty_sets={st.faulty_sets} "
          f"examined={st.graphs_examined} pruned={st.graphs_pruned} "
          f"time={st.duration_s:.3f}s")


def cmd_analyze(args) -> int:
    a = _load(args.config, check=False)
    w = _analyze(a, args)
    if w is None:
        return DOMAIN
    _print_witness(a, w)
    _write_json(args.json, witness_report(a, w))
    return OK


def cmd_attack(args) -> int:
    a = _load(args.config, check=False)
    values = None
    if args.values:
        if len(set(args.values)) != len(args.values):
            raise UsageError("--values must be pairwise distinct")
        values = [v.encode() for v in args.values]
    w = _analyze(a, args)
    if w is None:
        return DOMAIN
    try:
        sc, schedule = attack_witness(a, w, values, args.seed)
    except AttackError as e:
        if "values for an independent set" in str(e):
            raise UsageError(str(e)) from None
        print(f"k_max = {w.k_max}")
        print(f"attack impossible: {e}")
        return DOMAIN
    trace = run(sc, schedule)
    report = check_trace(trace, sc, w.k_max)
    distinct = trace.delivered_values()
    target = w if sc.adversary != "partition" else attack_target(a, w)
    print(f"k_max = {w.k_max}")
    print(f"attack: source={a.label(sc.source)} faulty={a.fmt(sc.faulty)} "
          f"independent set={a.fmt(target.independent_set)}")
    for p, vals in sorted(trace.deliveries().items()):
        print(f"  {a.label(p)} delivered {vals[0].decode(errors='replace')}")
    print(f"distinct delivered values = {len(distinct)}")
    print(f"oracle (k_bound={w.k_max}): {'pass' if report.ok else 'FAIL ' + ','.join(report.failed())}")
    try:
        with open(args.trace, "wb") as fh:
            fh.write(trace.to_jsonl())
    except OSError as e:
        raise UsageError(f"cannot write {args.trace}: {e.strerror}") from None
    print(f"trace written to {args.trace}")
    _write_json(args.json, {"k_max": w.k_max, "distinct": len(distinct),
                            "oracle": report.to_dict()})
    return OK if len(distinct) == w.k_max and report.ok else DOMAIN


def cmd_simulate(args) -> int:
    a = _load(args.config, check=False)
    problems = trust.validate(a)
    if problems:
        print(f"error: invalid trust assumptions: {problems[0]}", file=sys.stderr)
        return DOMAIN
    (source,) = _ids(a, [args.source]) if args.source else (None,)
    if source is None:
        raise UsageError("--source is required")
    faulty = _ids(a, args.faulty or "")
    if not a.fault_model.contains(faulty):
        print(f"error: execution does not comply with the fault model: {a.fmt(faulty)}",
              file=sys.stderr)
        return DOMAIN
    w = _analyze(a, args)
    if w is None:
        return DOMAIN
    params = {"at": args.crash_at} if args.adversary == "crash" else {}
    values = tuple(v.encode() for v in args.values)
    failures = 0
    reports = []
    for i in range(args.runs):
        try:
            sc = Scenario(a, source, faulty, args.adversary, params, values, args.seed + i)
        except ScenarioError as e:
            raise UsageError(str(e)) from None
        rep = check_trace(run(sc), sc, w.k_max)
        reports.append({"seed": sc.seed, **rep.to_dict()})
        if not rep.ok:
            failures += 1
            print(f"seed {sc.seed}: FAIL {','.join(rep.failed())}")
    print(f"{args.runs} run(s), k_bound={w.k_max}: {args.runs - failures} pass, {failures} fail")
    _write_json(args.json, {"k_bound": w.k_max, "runs": reports})
    return OK if failures == 0 else DOMAIN


def cmd_probe(args) -> int:
    a = _load(args.config)
    pairs = []
    procs = sorted(_ids(a, args.process)) if args.process else list(a.processes)
    for p in procs:
        qs = [_ids(a, args.quorum)] if args.quorum else list(a.quorums[p])
        pairs.extend((p, q) for q in qs)
    source = None
    if args.source:
        (source,) = _ids(a, [args.source])
    bad = 0
    for p, q in pairs:
        if q not in a.quorums[p]:
            raise UsageError(f"{a.fmt(q)} is not a quorum of {a.label(p)}")
        t = local_progress_probe(a, p, q, source=source)
        ok = bool(t.deliveries().get(p))
        bad += not ok
        print(f"{a.label(p)} with {a.fmt(q)}: {'delivers' if ok else 'STUCK'}")
    return OK if bad == 0 else DOMAIN


def cmd_gen(args) -> int:
    try:
        if args.uniform:
            n, f = args.uniform
            a = trust.generate_uniform(n, f)
        else:
            c, size = args.clusters
            a = trust.generate_clusters(c, size)
    except trust.TrustError as e:
        raise UsageError(str(e)) from None
    data = trust.serialize_config(a)
    if args.out:
        try:
            with open(args.out, "wb") as fh:
                fh.write(data)
        except OSError as e:
            raise UsageError(f"cannot write {args.out}: {e.strerror}") from None
    else:
        sys.stdout.write(data.decode())
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kcrb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a trust configuration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    def search_flags(p):
        p.add_argument("--no-dedup", action="store_true", help="disable redundancy reduction")
        p.add_argument("--method", choices=("conflict", "selections"), default="conflict")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analyze", help="compute k_max with a witness")
    p.add_argument("--config", required=True)
    p.add_argument("--json", metavar="PATH")
    search_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("attack", help="run the partition attack on the k_max witness")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--values", nargs="+")
    p.add_argument("--trace", default="attack-trace.jsonl", metavar="PATH")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_attack, no_dedup=False, method="conflict", workers=1)

    p = sub.add_parser("simulate", help="seeded runs checked against k_max")
    p.add_argument("--config", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--faulty", default="", help="comma separated labels")
    p.add_argument("--adversary", default="silent",
                   choices=("silent", "crash", "equivocate_split", "scripted_random"))
    p.add_argument("--crash-at", type=int, default=0)
    p.add_argument("--values", nargs="+", default=["A", "B"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_simulate, no_dedup=False, method="conflict", workers=1)

    p = sub.add_parser("probe", help="local progress probes")
    p.add_argument("--config", required=True)
    p.add_argument("--process")
    p.add_argument("--quorum", help="comma separated labels; default: every quorum")
    p.add_argument("--source")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("gen", help="generate a trust configuration")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--uniform", nargs=2, type=int, metavar=("N", "F"))
    g.add_argument("--clusters", nargs=2, type=int, metavar=("C", "SIZE"))
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())

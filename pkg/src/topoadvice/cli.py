"""Command-line entry point: ``topoadvice <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .advice import AdviceError, advice_size, load_advice, save_advice
from .families import (
    BroomSpec,
    LollipopSpec,
    derive_prime_pair,
    make_broom,
    make_h_pair,
    make_lollipop,
    random_connected,
    save_yk_fixture,
    search_yk,
)
from .graph import graph_to_json, load_graph, port_isomorphism
from .harness import (
    ExperimentConfig,
    advice_time_violations,
    run_experiment,
    verify_recognition,
    witness_broom,
    witness_gadget,
    witness_lollipop,
)
from .protocols import ProtocolParams, make_advice
from .simulator import Trace, simulate

FAMILIES = ("broom", "lollipop", "yk", "yk-prime", "h-pair", "random")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.family} needs {', '.join(missing)}")


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "broom":
        _need(args, "n", "D", "k")
        matching = [tuple(p) for p in json.loads(args.matching)] if args.matching else None
        b = make_broom(BroomSpec(args.n, args.D, args.k), matching)
        g, meta = b.graph, b.meta()
    elif fam == "lollipop":
        _need(args, "n", "D")
        lol = make_lollipop(LollipopSpec(args.n, args.D, seed=args.seed))
        g, meta = lol.graph, lol.meta()
    elif fam == "random":
        _need(args, "n")
        g = random_connected(args.n, args.max_degree, seed=args.seed)
        meta = {"family": "random", "n": args.n, "max_degree": args.max_degree, "seed": args.seed}
    else:
        pair = search_yk()
        if fam == "yk-prime":
            pair = derive_prime_pair(pair)
        elif fam == "h-pair":
            _need(args, "n", "D")
            pair = make_h_pair(args.n, args.D, pair)
        i = args.which - 1
        g, meta = pair.graphs[i], pair.meta(args.which)
        meta["black"] = list(pair.black[i])
    _emit(graph_to_json(g, meta), args.output)
    return 0


def cmd_advise(args) -> int:
    g = load_graph(args.graph)
    params = ProtocolParams(args.protocol, args.k)
    advice = make_advice(g, params)
    if args.output:
        save_advice(advice, args.output, args.protocol, g.n, args.k)
    else:
        print(json.dumps({"advice": advice, "size": advice_size(advice)}))
    return 0


def cmd_run(args) -> int:
    g = load_graph(args.graph)
    k = args.k
    if args.advice:
        data = load_advice(args.advice)
        protocol = args.protocol or data.get("protocol")
        k = k if k is not None else data.get("k")
        advice = data["advice"]
        if protocol is None:
            raise UsageError("advice file has no header; pass --protocol")
        params = ProtocolParams(protocol, k)
    elif args.protocol:
        params = ProtocolParams(args.protocol, k)
        advice = make_advice(g, params)
    else:
        raise UsageError("run needs --advice or --protocol")
    trace = simulate(g, advice, params, backend=args.backend, max_rounds=args.max_rounds, keep_log=args.log)
    iso = {}
    for o in trace.outputs:
        if o is not None and o.graph not in iso:
            iso[o.graph] = port_isomorphism(o.graph, g) is not None
    iso_ok = [o is not None and iso[o.graph] for o in trace.outputs]
    _emit(trace.to_json(iso_ok=iso_ok, include_log=args.log), args.output)
    return 0


def cmd_verify(args) -> int:
    g = load_graph(args.graph)
    trace = Trace.from_dict(json.loads(Path(args.trace).read_text()))
    ok = verify_recognition(g, trace, args.mode)
    print(json.dumps({"mode": args.mode, "ok": ok}))
    return 0 if ok else 1


def cmd_witness(args) -> int:
    fam = args.family
    if fam == "lollipop":
        _need(args, "n", "D")
        rep = witness_lollipop(args.n, args.D, args.seeds, args.depth)
    elif fam == "broom":
        _need(args, "n", "D", "k")
        rep = witness_broom(args.n, args.D, args.k, args.max_matchings, args.depth)
    else:
        pair = search_yk()
        if fam == "yk-prime":
            pair = derive_prime_pair(pair)
        elif fam == "h-pair":
            _need(args, "n", "D")
            pair = make_h_pair(args.n, args.D, pair)
        rep = witness_gadget(pair)
    _emit(json.dumps(rep.to_dict()), args.output)
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output:
        cfg.output = args.output
    if args.workers is not None:
        cfg.workers = args.workers
    if args.backend:
        cfg.backend = args.backend
    rows = run_experiment(cfg)
    failed = [r for r in rows if not (r["recognition_ok"] and r["bound_ok"])]
    summary = {
        "rows": len(rows),
        "failed_rows": len(failed),
        "advice_time_violations": advice_time_violations(rows),
        "output": cfg.output,
    }
    print(json.dumps(summary))
    return 0


def cmd_search_yk(args) -> int:
    pair = search_yk(budget=args.budget, use_fixture=not args.fresh)
    if args.save_fixture:
        save_yk_fixture(pair)
    _emit(json.dumps(pair.to_dict()), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="topoadvice", description="Topology recognition with advice in anonymous networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a graph")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--D", type=int)
    g.add_argument("--k", type=int, help="bristle length (broom)")
    g.add_argument("--seed", type=int)
    g.add_argument("--max-degree", type=int, default=4)
    g.add_argument("--which", type=int, choices=(1, 2), default=1, help="graph of a gadget pair")
    g.add_argument("--matching", help="broom matching as JSON, e.g. [[0,1],[2,3]]")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("advise", help="compute advice for a graph")
    a.add_argument("--protocol", choices=("tr1", "tr2", "tr3", "tr4"), required=True)
    a.add_argument("--graph", required=True)
    a.add_argument("--k", type=int)
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_advise)

    r = sub.add_parser("run", help="simulate a protocol")
    r.add_argument("--graph", required=True)
    r.add_argument("--advice")
    r.add_argument("--protocol", choices=("tr1", "tr2", "tr3", "tr4"))
    r.add_argument("--k", type=int)
    r.add_argument("--backend", choices=("view", "faithful"), default="view")
    r.add_argument("--max-rounds", type=int)
    r.add_argument("--log", action="store_true", help="record messages (faithful backend)")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a trace against its graph")
    v.add_argument("--graph", required=True)
    v.add_argument("--trace", required=True)
    v.add_argument("--mode", choices=("anonymous", "labeled"), default="labeled")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("witness", help="lower-bound witness experiments")
    w.add_argument("--family", choices=("lollipop", "broom", "yk", "yk-prime", "h-pair"), required=True)
    w.add_argument("--n", type=int)
    w.add_argument("--D", type=int)
    w.add_argument("--k", type=int)
    w.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    w.add_argument("--depth", type=int)
    w.add_argument("--max-matchings", type=int)
    w.add_argument("-o", "--output")
    w.set_defaults(func=cmd_witness)

    e = sub.add_parser("experiment", help="run a parameter sweep into CSV")
    e.add_argument("--config", required=True)
    e.add_argument("--backend", choices=("view", "faithful"))
    e.add_argument("--workers", type=int)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("search-yk", help="find the 6-node gadget pair")
    s.add_argument("--budget", type=int, default=2_000_000)
    s.add_argument("--fresh", action="store_true", help="search even if the fixture exists")
    s.add_argument("--save-fixture", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_search_yk)
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    except (AdviceError, ValueError, OSError, RuntimeError) as exc:
        return _fail(type(exc).__name__, exc, 1)


if __name__ == "__main__":
    sys.exit(main())

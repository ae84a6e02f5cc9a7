"""``atomkg`` command line."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import logic
from .atomizer import AtomizationResult, RemoteBackend, RuleBasedBackend, ScriptedBackend
from .evaluation import (
    DEFAULT_THRESHOLD,
    GoldRecord,
    LexicalBackend,
    RemoteEmbeddingBackend,
    bootstrap_significance,
    evaluate_dataset,
    per_item_scores,
    sweep_thresholds,
)
from .extraction import RemoteExtractor, ScriptedExtractor, Triplet
from .kg import build_graph, export_graph, infer_transitive
from .pipeline import (
    PipelineConfig,
    StageError,
    atomize_stream,
    dumps,
    extract_stream,
    read_jsonl,
    read_lines,
    run_pipeline,
)
from .remote import RemoteConfig

logger = logging.getLogger("atomkg")


def _remote_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base-url", help="chat/embedding endpoint base URL")
    p.add_argument("--model", default="", help="model name sent with each request")
    p.add_argument("--timeout", type=float, default=60.0)


def _remote_config(args) -> RemoteConfig:
    if not args.base_url:
        raise SystemExit("--base-url is required for the remote backend")
    return RemoteConfig(args.base_url, args.model, args.timeout)


def _write_jsonl(path: str, records) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
            n += 1
    return n


def cmd_atomize(args) -> int:
    if args.backend == "rules":
        backend = RuleBasedBackend()
    elif args.backend == "scripted":
        if not args.transcript:
            raise SystemExit("--transcript is required for the scripted backend")
        backend = ScriptedBackend.from_file(args.transcript)
    else:
        backend = RemoteBackend(_remote_config(args))
    results = atomize_stream(read_jsonl(args.input), backend, args.cap, args.concurrency)
    n = _write_jsonl(args.out, (r.to_dict() for r in results))
    logger.info("atomized %d records into %s", n, args.out)
    return 0


def cmd_extract(args) -> int:
    if args.backend == "scripted":
        if not args.transcript:
            raise SystemExit("--transcript is required for the scripted backend")
        backend = ScriptedExtractor.from_file(args.transcript)
    else:
        backend = RemoteExtractor(_remote_config(args))
    records = list(read_jsonl(args.input))
    if args.atoms:
        atoms = [AtomizationResult.from_dict(r) for r in read_jsonl(args.atoms)]
    elif args.config == "direct":
        atoms = [None] * len(records)
    else:
        raise SystemExit(f"--atoms is required for the {args.config} configuration")
    labels = read_lines(args.labels) if args.labels else None
    stream = extract_stream(records, atoms, backend, args.mode, args.config, labels, args.concurrency)
    n = _write_jsonl(args.out, (t.to_record() for batch in stream for t in batch))
    logger.info("wrote %d triplets to %s", n, args.out)
    return 0


def cmd_kg(args) -> int:
    triplets = [Triplet.from_record(r) for r in read_jsonl(args.input)]
    graph = build_graph(triplets)
    if args.transitive:
        graph = infer_transitive(graph, read_lines(args.transitive))
    Path(args.out).write_text(export_graph(graph, "json") + "\n", encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(export_graph(graph, "dot") + "\n", encoding="utf-8")
    logger.info("graph: %d nodes, %d edges (%d derived)", len(graph.nodes), len(graph.edges), len(graph.derived()))
    return 0


def cmd_eval(args) -> int:
    gold = [GoldRecord.from_dict(r) for r in read_jsonl(args.gold)]
    pred = [Triplet.from_record(r) for r in read_jsonl(args.pred)]
    sim = RemoteEmbeddingBackend(_remote_config(args)) if args.sim == "remote" else LexicalBackend()
    vocab = read_lines(args.vocab) if args.vocab else None
    report = evaluate_dataset(gold, pred, args.mode, sim, args.threshold, vocab)
    if args.compare:
        other = [Triplet.from_record(r) for r in read_jsonl(args.compare)]
        a = per_item_scores(gold, pred, sim, args.threshold, vocab)
        b = per_item_scores(gold, other, sim, args.threshold, vocab)
        report.p_value = bootstrap_significance(a, b, args.iterations, args.seed)
    if args.sweep:
        steps = [round(i * 0.05, 2) for i in range(21)]
        report.extra["sweep"] = [[t, r] for t, r in sweep_thresholds(gold, pred, sim, steps, vocab)]
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.to_json())
    if not args.json:
        print()
        print(report.to_table())
    return 0


def cmd_pipeline(args) -> int:
    cfg = PipelineConfig.load(
        args.config,
        cap=args.cap,
        config=args.extraction,
        mode=args.mode,
        threshold=args.threshold,
        concurrency=args.concurrency,
        seed=args.seed,
        gold=args.gold,
        transitive=args.transitive,
    )
    try:
        manifest = run_pipeline(cfg, args.input, args.out_dir)
    except StageError as exc:
        print(f"atomkg: {exc}", file=sys.stderr)
        return exc.exit_code
    for stage in manifest["stages"]:
        logger.info("%s: %s", stage["stage"], {k: v for k, v in stage.items() if k != "stage"})
    return 0


def cmd_logic(args) -> int:
    phi = logic.parse_formula(args.formula)
    if args.action == "cnf":
        print(logic.to_text(logic.to_cnf(phi)))
        return 0
    space = logic.WorldSpace.of(phi)
    info = logic.information(phi, space)
    print(f"formula      {logic.to_text(phi)}")
    print(f"variables    {', '.join(space.variables)}")
    print(f"content      {len(logic.content(phi, space))} / {space.size} worlds")
    print(f"information  {'inf' if info == float('inf') else f'{info:.6g}'} bits")
    print(f"atomic       {'yes' if logic.is_atomic(phi) else 'no'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomkg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("atomize", help="decompose corpus records into atomic propositions")
    p.add_argument("--backend", choices=["remote", "rules", "scripted"], default="rules")
    p.add_argument("--cap", type=int, default=5)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--transcript", help="scripted backend transcript (JSON object)")
    p.add_argument("--concurrency", type=int, default=4)
    _remote_args(p)
    p.set_defaults(func=cmd_atomize)

    p = sub.add_parser("extract", help="extract triplets under one configuration")
    p.add_argument("--mode", choices=["open", "closed"], default="open")
    p.add_argument("--config", choices=["direct", "prop", "comb", "union"], default="direct")
    p.add_argument("--backend", choices=["remote", "scripted"], default="scripted")
    p.add_argument("--atoms")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--transcript")
    p.add_argument("--labels", help="relation vocabulary, one per line (closed IE)")
    p.add_argument("--concurrency", type=int, default=4)
    _remote_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("kg", help="build a knowledge graph with transitive inference")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--transitive", help="transitive relations, one per line")
    p.add_argument("--out", required=True)
    p.add_argument("--dot")
    p.set_defaults(func=cmd_kg)

    p = sub.add_parser("eval", help="score predicted triplets against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--mode", choices=["open", "closed"], default="open")
    p.add_argument("--sim", choices=["remote", "lexical"], default="lexical")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--vocab", help="relation vocabulary file; defaults to the gold relations")
    p.add_argument("--compare", help="second system's triplets for a paired bootstrap test")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--sweep", action="store_true", help="report relation recall over thresholds 0..1")
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--json", action="store_true", help="print only the JSON report")
    _remote_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--config", help="pipeline config (JSON)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cap", type=int)
    p.add_argument("--extraction", choices=["direct", "prop", "comb", "union"])
    p.add_argument("--mode", choices=["open", "closed"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--concurrency", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gold")
    p.add_argument("--transitive")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("logic", help="inspect a propositional formula")
    p.add_argument("action", choices=["eval", "cnf"])
    p.add_argument("formula")
    p.set_defaults(func=cmd_logic)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (logic.LogicError, ValueError, FileNotFoundError, KeyError, RuntimeError) as exc:
        print(f"atomkg {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end runner: atomize, extract, build the graph, score."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator

from .atomizer import AtomizationResult, atomize, make_backend
from .evaluation import GoldRecord, evaluate_dataset, make_similarity
from .extraction import Config, ExtractionTask, Mode, Triplet, make_extractor, run_config
from .kg import build_graph, export_graph, infer_transitive

logger = logging.getLogger(__name__)

STAGES = ("atomize", "extract", "kg", "eval")
EXIT_CODES = {"atomize": 3, "extract": 4, "kg": 5, "eval": 6}


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.stage]


@dataclass
class PipelineConfig:
    propositioner: dict = field(default_factory=lambda: {"kind": "rules"})
    extractor: dict = field(default_factory=lambda: {"kind": "scripted", "transcript": None})
    embeddings: dict = field(default_factory=lambda: {"kind": "lexical"})
    cap: int = 5
    config: str = "prop"
    mode: str = "open"
    transitive: str | None = None
    threshold: float = 0.8
    concurrency: int = 4
    seed: int = 0
    gold: str | None = None
    labels: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "PipelineConfig":
        data: dict = {}
        base = Path(".")
        if path is not None:
            base = Path(path).parent
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**data)
        cfg._resolve(base)
        cfg.validate()
        return cfg

    def _resolve(self, base: Path) -> None:
        # relative paths in a config file are relative to that file
        def fix(p):
            if not p:
                return None
            return p if Path(p).is_absolute() else str((base / p).resolve())

        for spec in (self.propositioner, self.extractor):
            if spec.get("transcript"):
                spec["transcript"] = fix(spec["transcript"])
        self.transitive = fix(self.transitive)
        self.gold = fix(self.gold)
        self.labels = fix(self.labels)

    def validate(self) -> None:
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        Config(self.config)
        Mode(self.mode)
        paths = [self.transitive, self.gold, self.labels]
        paths += [s.get("transcript") for s in (self.propositioner, self.extractor) if s.get("kind") == "scripted"]
        for p in paths:
            if p is not None and not Path(p).is_file():
                raise FileNotFoundError(f"config path does not exist: {p}")
        if self.extractor.get("kind") == "scripted" and not self.extractor.get("transcript"):
            raise ValueError("scripted extractor needs a transcript file")


# ---------------------------------------------------------------------------
# JSONL helpers


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except ValueError as exc:
                raise ValueError(f"{path}:{n}: invalid JSON: {exc}") from exc


def dumps(record) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def read_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


def _batched(items: Iterable, n: int) -> Iterator[list]:
    it = iter(items)
    while batch := list(islice(it, n)):
        yield batch


def _map_ordered(fn, items: Iterable, concurrency: int) -> Iterator:
    """Apply ``fn`` with bounded parallelism, yielding results in input order."""
    if concurrency <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        for batch in _batched(items, concurrency):
            yield from pool.map(fn, batch)


# ---------------------------------------------------------------------------
# stages


def atomize_stream(records: Iterable[dict], backend, cap: int, concurrency: int = 4) -> Iterator[AtomizationResult]:
    def one(rec: dict) -> AtomizationResult:
        if hasattr(backend, "title"):
            backend.title = rec.get("title", "") or ""
        return atomize(rec["text"], backend, cap=cap, source_id=str(rec["source_id"]), concurrency=concurrency)

    # a remote backend carries per-record title state, so records go one at a time
    yield from map(one, records)


def task_for(rec: dict, mode: str, config: str, labels: list[str] | None = None) -> ExtractionTask:
    return ExtractionTask(
        text=rec["text"],
        mode=Mode(mode),
        config=Config(config),
        source_id=str(rec["source_id"]),
        e1=rec.get("e1", ""),
        e2=rec.get("e2", ""),
        labels=list(rec.get("labels") or labels or []),
    )


def extract_stream(
    records: Iterable[dict],
    atoms: Iterable[AtomizationResult | None],
    backend,
    mode: str,
    config: str,
    labels: list[str] | None = None,
    concurrency: int = 4,
) -> Iterator[list[Triplet]]:
    pairs = zip(records, atoms)

    def one(pair) -> list[Triplet]:
        rec, result = pair
        if result is not None and result.source_id and result.source_id != str(rec["source_id"]):
            raise ValueError(f"atoms for {result.source_id!r} do not line up with record {rec['source_id']!r}")
        # records already run in parallel; keep the global in-flight bound
        inner = 1 if concurrency > 1 else concurrency
        return run_config(task_for(rec, mode, config, labels), result, backend, inner)

    yield from _map_ordered(one, pairs, concurrency)


def run_pipeline(cfg: PipelineConfig, corpus: str | Path, out_dir: str | Path) -> dict:
    """Run every stage, writing artifacts and ``manifest.json`` to ``out_dir``.

    Raises :class:`StageError` naming the failed stage; artifacts of stages
    that completed are left in place.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"config": asdict(cfg), "stages": []}

    def record(stage: str, started: float, **counts) -> None:
        manifest["stages"].append({"stage": stage, "seconds": round(time.perf_counter() - started, 6), **counts})
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")

    labels = read_lines(cfg.labels) if cfg.labels else None

    started = time.perf_counter()
    try:
        backend = make_backend(cfg.propositioner)
        n_records = n_atoms = discarded = calls = 0
        with open(out / "atoms.jsonl", "w", encoding="utf-8") as fh:
            for result in atomize_stream(read_jsonl(corpus), backend, cfg.cap, cfg.concurrency):
                fh.write(dumps(result.to_dict()) + "\n")
                n_records += 1
                n_atoms += len(result.atoms)
                discarded += result.unproved_discarded
                calls += result.backend_calls
    except Exception as exc:
        raise StageError("atomize", exc) from exc
    record("atomize", started, records=n_records, atoms=n_atoms, unproved_discarded=discarded, backend_calls=calls)

    started = time.perf_counter()
    try:
        extractor = make_extractor(cfg.extractor)
        atoms = (AtomizationResult.from_dict(r) for r in read_jsonl(out / "atoms.jsonl"))
        n_triplets = 0
        all_triplets: list[Triplet] = []
        with open(out / "triplets.jsonl", "w", encoding="utf-8") as fh:
            for triplets in extract_stream(read_jsonl(corpus), atoms, extractor, cfg.mode, cfg.config, labels, cfg.concurrency):
                for t in triplets:
                    fh.write(dumps(t.to_record()) + "\n")
                n_triplets += len(triplets)
                all_triplets.extend(triplets)
    except Exception as exc:
        raise StageError("extract", exc) from exc
    record("extract", started, triplets=n_triplets, **extractor.diagnostics.to_dict())

    started = time.perf_counter()
    try:
        graph = build_graph(all_triplets)
        relations = read_lines(cfg.transitive) if cfg.transitive else []
        graph = infer_transitive(graph, relations)
        (out / "graph.json").write_text(export_graph(graph, "json") + "\n", encoding="utf-8")
        (out / "graph.dot").write_text(export_graph(graph, "dot") + "\n", encoding="utf-8")
    except Exception as exc:
        raise StageError("kg", exc) from exc
    record("kg", started, nodes=len(graph.nodes), edges=len(graph.edges), derived=len(graph.derived()))

    started = time.perf_counter()
    try:
        report: dict = {
            "records": n_records,
            "atoms": n_atoms,
            "triplets": n_triplets,
            "nodes": len(graph.nodes),
            "edges": len(graph.edges),
            "derived_edges": len(graph.derived()),
        }
        if cfg.gold:
            gold = [GoldRecord.from_dict(r) for r in read_jsonl(cfg.gold)]
            scored = evaluate_dataset(gold, all_triplets, cfg.mode, make_similarity(cfg.embeddings), cfg.threshold)
            report["scores"] = scored.to_dict()
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except Exception as exc:
        raise StageError("eval", exc) from exc
    record("eval", started, scored=bool(cfg.gold))
    return manifest

"""Scoring extracted triplets against gold annotations.

Entity matching accepts exact, substring and superstring matches,
case-insensitively. Relations are compared after mapping the predicted
relation onto a finite vocabulary by embedding cosine similarity.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _core
from .atomizer import normalize_text
from .extraction import Triplet
from .remote import EmbeddingClient, RemoteConfig

DEFAULT_THRESHOLD = 0.80


@dataclass(frozen=True)
class GoldTriplet:
    subject: str
    relation: str
    object: str
    source_id: str = ""


@dataclass
class GoldRecord:
    source_id: str
    text: str = ""
    gold_triplets: list[GoldTriplet] = field(default_factory=list)
    e1: str = ""
    e2: str = ""
    relation: str = ""
    lang: str = "en"

    @classmethod
    def from_dict(cls, rec: dict) -> "GoldRecord":
        sid = str(rec["source_id"])
        triplets = []
        for item in rec.get("gold_triplets", []):
            if isinstance(item, dict):
                s, r, o = item["s"], item["r"], item["o"]
            else:
                s, r, o = item
            triplets.append(GoldTriplet(normalize_text(s), normalize_text(r), normalize_text(o), sid))
        if not triplets and rec.get("relation") and rec.get("e1") and rec.get("e2"):
            triplets.append(GoldTriplet(rec["e1"], rec["relation"], rec["e2"], sid))
        return cls(
            source_id=sid,
            text=rec.get("text", ""),
            gold_triplets=triplets,
            e1=rec.get("e1", ""),
            e2=rec.get("e2", ""),
            relation=rec.get("relation", ""),
            lang=rec.get("lang", "en"),
        )


# ---------------------------------------------------------------------------
# entities


def entity_match(gold_entity: str, predicted: str) -> bool:
    g, p = gold_entity.casefold(), predicted.casefold()
    if not g or not p:
        return False
    return g == p or g in p or p in g


def _entities_found(gold_entities: Iterable[str], predicted_triplets: Iterable[Triplet]) -> int:
    slots = [x for t in predicted_triplets for x in (t.subject, t.object)]
    return sum(1 for g in gold_entities if any(entity_match(g, p) for p in slots))


def entity_recall(gold_entities: Sequence[str], predicted_triplets: Iterable[Triplet]) -> float:
    if not gold_entities:
        raise ValueError("entity recall is undefined for an empty gold set")
    return _entities_found(gold_entities, predicted_triplets) / len(gold_entities)


# ---------------------------------------------------------------------------
# similarity backends

_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def lexical_form(text: str) -> str:
    """``hasLocation`` and ``has_location`` both become ``has location``."""
    spaced = _CAMEL.sub(" ", text).replace("_", " ").replace("-", " ")
    return " ".join(spaced.casefold().split())


def char_trigrams(text: str) -> list[str]:
    form = lexical_form(text)
    if len(form) < 3:
        return [form] if form else []
    return [form[i : i + 3] for i in range(len(form) - 2)]


class SimilarityBackend:
    kind = "base"

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class LexicalBackend(SimilarityBackend):
    """Character-trigram count vectors, hashed into ``dim`` buckets."""

    kind = "lexical"

    def __init__(self, dim: int = 1 << 16):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for gram in char_trigrams(text):
            vec[zlib.crc32(gram.encode("utf-8")) % self.dim] += 1.0
        return vec


class RemoteEmbeddingBackend(SimilarityBackend):
    kind = "remote"

    def __init__(self, config: RemoteConfig, client=None):
        self.client = EmbeddingClient(config, client)
        self._cache: dict[str, np.ndarray] = {}
        self.dim: int | None = None

    def embed(self, text: str) -> np.ndarray:
        if text not in self._cache:
            vec = np.asarray(self.client.embed(text), dtype=float)
            if self.dim is None:
                self.dim = vec.shape[0]
            elif vec.shape[0] != self.dim:
                raise ValueError(f"embedding dimension changed from {self.dim} to {vec.shape[0]}")
            self._cache[text] = vec
        return self._cache[text]


def make_similarity(spec: dict | str | None) -> SimilarityBackend:
    if spec is None or spec == "lexical" or (isinstance(spec, dict) and spec.get("kind", "lexical") == "lexical"):
        return LexicalBackend()
    if isinstance(spec, dict) and spec.get("kind") == "remote":
        return RemoteEmbeddingBackend(RemoteConfig.from_dict(spec))
    raise ValueError(f"unknown similarity backend {spec!r}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def semantic_map(
    relation: str,
    vocabulary: Sequence[str],
    backend: SimilarityBackend,
    threshold: float = DEFAULT_THRESHOLD,
) -> str | None:
    """Most similar vocabulary label, or None below ``threshold``.

    Ties go to the label listed first.
    """
    if not vocabulary:
        raise ValueError("vocabulary is empty")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if relation in vocabulary:
        return relation
    query = backend.embed(relation)
    best, best_sim = None, -math.inf
    for label in vocabulary:
        sim = cosine(query, backend.embed(label))
        if sim > best_sim:
            best, best_sim = label, sim
    return best if best_sim >= threshold else None


# ---------------------------------------------------------------------------
# relation recall and P/R/F1/AUC

Matcher = Callable[[Triplet, GoldTriplet], bool]


def _pred_sources(t: Triplet) -> set[str]:
    return {p.source_id for p in t.provenance if p.source_id}


def _same_source(pred: Triplet, gold: GoldTriplet) -> bool:
    sources = _pred_sources(pred)
    return not gold.source_id or not sources or gold.source_id in sources


class SemanticMatcher:
    """Entities match on both slots, in order, and the mapped relation
    equals the gold relation."""

    def __init__(self, vocabulary: Sequence[str], backend: SimilarityBackend, threshold: float):
        self.vocabulary = list(vocabulary)
        self.backend = backend
        self.threshold = threshold
        self._cache: dict[str, str | None] = {}

    def mapped(self, relation: str) -> str | None:
        if relation not in self._cache:
            self._cache[relation] = semantic_map(relation, self.vocabulary, self.backend, self.threshold)
        return self._cache[relation]

    def __call__(self, pred: Triplet, gold: GoldTriplet) -> bool:
        return (
            _same_source(pred, gold)
            and entity_match(gold.subject, pred.subject)
            and entity_match(gold.object, pred.object)
            and self.mapped(pred.relation) == gold.relation
        )


def _gold_triplets(gold: Iterable[GoldRecord | GoldTriplet]) -> list[GoldTriplet]:
    out = []
    for item in gold:
        if isinstance(item, GoldRecord):
            out.extend(item.gold_triplets)
        else:
            out.append(item)
    return out


def relation_hits(
    gold: Iterable[GoldRecord | GoldTriplet],
    predicted: Sequence[Triplet],
    backend: SimilarityBackend,
    threshold: float = DEFAULT_THRESHOLD,
    vocabulary: Sequence[str] | None = None,
) -> list[int]:
    """Per gold triplet, 1 if some prediction matches it, else 0."""
    golds = _gold_triplets(gold)
    vocab = list(vocabulary) if vocabulary else sorted({g.relation for g in golds})
    matcher = SemanticMatcher(vocab, backend, threshold)
    return [int(any(matcher(p, g) for p in predicted)) for g in golds]


def relation_recall(
    gold: Iterable[GoldRecord | GoldTriplet],
    predicted: Sequence[Triplet],
    backend: SimilarityBackend,
    threshold: float = DEFAULT_THRESHOLD,
    vocabulary: Sequence[str] | None = None,
) -> float:
    hits = relation_hits(gold, predicted, backend, threshold, vocabulary)
    if not hits:
        raise ValueError("relation recall is undefined for an empty gold set")
    return sum(hits) / len(hits)


@dataclass
class EvalReport:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    auc: float = 0.0
    accuracy: float | None = None
    entity_recall: float | None = None
    relation_recall: float | None = None
    matched_predictions: int = 0
    matched_gold: int = 0
    gold: int = 0
    predicted: int = 0
    p_value: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        rows = []
        for key, value in self.to_dict().items():
            if key == "extra":
                for k, v in sorted(value.items()):
                    rows.append((k, v))
                continue
            rows.append((key, value))
        width = max(len(k) for k, _ in rows)
        lines = []
        for key, value in rows:
            if value is None:
                shown = "-"
            elif isinstance(value, float):
                shown = f"{value:.4f}"
            else:
                shown = str(value)
            lines.append(f"{key.ljust(width)}  {shown}")
        return "\n".join(lines)


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _pr_at(predicted, gold, correct, matcher, threshold):
    kept = [i for i, t in enumerate(predicted) if t.confidence >= threshold]
    p = sum(correct[i] for i in kept) / len(kept) if kept else 0.0
    hit = sum(1 for g in gold if any(matcher(predicted[i], g) for i in kept))
    return p, hit / len(gold), hit


def prf1_auc(predicted: Sequence[Triplet], gold: Sequence[GoldTriplet], matcher: Matcher) -> EvalReport:
    """Precision, recall, F1, and area under the precision-recall curve.

    The curve has one point per distinct confidence, swept from the highest
    down, and is extended flat to recall 0 before trapezoidal integration.
    Precision counts predictions matching some gold triplet; recall counts
    gold triplets matched by some prediction.
    """
    gold = list(gold)
    if not gold:
        raise ValueError("P/R/F1 are undefined for an empty gold set")
    predicted = list(predicted)
    if not predicted:
        return EvalReport(gold=len(gold))
    correct = [int(any(matcher(t, g) for g in gold)) for t in predicted]
    points = []
    for tau in sorted({t.confidence for t in predicted}, reverse=True):
        p, r, _ = _pr_at(predicted, gold, correct, matcher, tau)
        points.append((r, p))
    auc = 0.0
    prev_r, prev_p = 0.0, points[0][1]
    for r, p in points:
        auc += (r - prev_r) * (p + prev_p) / 2.0
        prev_r, prev_p = r, p
    p, r, hit = _pr_at(predicted, gold, correct, matcher, -math.inf)
    return EvalReport(
        precision=p,
        recall=r,
        f1=f1_score(p, r),
        auc=auc,
        matched_predictions=sum(correct),
        matched_gold=hit,
        gold=len(gold),
        predicted=len(predicted),
    )


# ---------------------------------------------------------------------------
# significance


def bootstrap_significance(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    iterations: int = 10_000,
    seed: int = 0,
) -> float:
    """One-sided paired bootstrap p-value for "system A beats system B".

    Item indices are resampled with replacement; the p-value is the share
    of resamples in which A's mean does not exceed B's.
    """
    if len(scores_a) != len(scores_b):
        raise ValueError(f"paired scores differ in length: {len(scores_a)} vs {len(scores_b)}")
    if not scores_a:
        raise ValueError("no scores to resample")
    if iterations < 1000:
        raise ValueError("use at least 1000 bootstrap iterations")
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    diffs = a - b
    # integer kernel: scale so 0/1 scores (and any finite decimals) stay exact
    scale = 1
    while not np.allclose(diffs * scale, np.round(diffs * scale)) and scale < 10**6:
        scale *= 10
    as_int = np.round(diffs * scale).astype(np.int64)
    count = _core.bootstrap_count(as_int.tolist(), iterations, seed)
    return count / iterations


# ---------------------------------------------------------------------------
# dataset-level evaluation


def _by_source(predicted: Iterable[Triplet]) -> dict[str, list[Triplet]]:
    groups: dict[str, list[Triplet]] = defaultdict(list)
    for t in predicted:
        for sid in _pred_sources(t) or {""}:
            groups[sid].append(t)
    return groups


def closed_accuracy_hits(records: Sequence[GoldRecord], predicted: Sequence[Triplet]) -> list[int]:
    """Per record, 1 if the exact gold relation was predicted for its pair."""
    groups = _by_source(predicted)
    hits = []
    for rec in records:
        e1 = (rec.e1 or (rec.gold_triplets[0].subject if rec.gold_triplets else "")).casefold()
        e2 = (rec.e2 or (rec.gold_triplets[0].object if rec.gold_triplets else "")).casefold()
        gold_rel = rec.relation or (rec.gold_triplets[0].relation if rec.gold_triplets else "")
        preds = groups.get(rec.source_id, []) + groups.get("", [])
        hits.append(int(any(
            t.relation == gold_rel and t.subject.casefold() == e1 and t.object.casefold() == e2
            for t in preds
        )))
    return hits


def evaluate_dataset(
    records: Sequence[GoldRecord],
    predicted: Sequence[Triplet],
    mode: str = "open",
    backend: SimilarityBackend | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    vocabulary: Sequence[str] | None = None,
) -> EvalReport:
    """Full report for one system over a gold dataset."""
    backend = backend or LexicalBackend()
    records = [r for r in records if r.gold_triplets]
    if not records:
        raise ValueError("no scorable gold records")
    golds = _gold_triplets(records)
    vocab = list(vocabulary) if vocabulary else sorted({g.relation for g in golds})
    matcher = SemanticMatcher(vocab, backend, threshold)
    report = prf1_auc(predicted, golds, matcher)
    groups = _by_source(predicted)
    found = total = 0
    for rec in records:
        preds = groups.get(rec.source_id, []) + groups.get("", [])
        entities = sorted({x for g in rec.gold_triplets for x in (g.subject, g.object)})
        total += len(entities)
        found += _entities_found(entities, preds)
    report.entity_recall = found / total
    report.relation_recall = report.matched_gold / report.gold
    if mode == "closed":
        hits = closed_accuracy_hits(records, predicted)
        report.accuracy = sum(hits) / len(hits)
    else:
        exact = {(g.source_id, g.subject.casefold(), g.relation.casefold(), g.object.casefold()) for g in golds}
        got = set()
        for t in predicted:
            for sid in _pred_sources(t) or {""}:
                got.add((sid, t.subject.casefold(), t.relation.casefold(), t.object.casefold()))
        report.accuracy = sum(1 for g in exact if g in got) / len(exact)
    return report


def per_item_scores(
    records: Sequence[GoldRecord],
    predicted: Sequence[Triplet],
    backend: SimilarityBackend,
    threshold: float = DEFAULT_THRESHOLD,
    vocabulary: Sequence[str] | None = None,
) -> list[int]:
    """0/1 relation-recall outcome per gold triplet, for paired tests."""
    return relation_hits([r for r in records if r.gold_triplets], predicted, backend, threshold, vocabulary)


def sweep_thresholds(
    records: Sequence[GoldRecord],
    predicted: Sequence[Triplet],
    backend: SimilarityBackend,
    thresholds: Iterable[float],
    vocabulary: Sequence[str] | None = None,
) -> list[tuple[float, float]]:
    """Relation recall at each threshold."""
    return [
        (t, relation_recall(records, predicted, backend, t, vocabulary))
        for t in thresholds
    ]

"""Triplet extraction from raw text and atomic propositions.

Four configurations are supported:

* ``direct`` extracts from the source text only.
* ``prop`` extracts from each atom and merges the results.
* ``comb`` (closed IE) keeps the direct output when one of its triplets
  names both target entities, and falls back to the atom output otherwise.
* ``union`` merges direct and atom outputs.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import httpx

from .atomizer import AtomizationResult, normalize_text
from .prompts import CLOSED_IE_PROMPT, OPEN_IE_PROMPT, render
from .remote import ChatClient, RemoteConfig

logger = logging.getLogger(__name__)

NO_RELATION = "NoRelation"


class Mode(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class Config(enum.Enum):
    DIRECT = "direct"
    PROP = "prop"
    COMB = "comb"
    UNION = "union"


class Origin(str, enum.Enum):
    DIRECT = "Direct"
    PROP = "Prop"


@dataclass(frozen=True, order=True)
class Provenance:
    source_id: str
    origin: str
    proposition: str | None = None

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "origin": self.origin, "proposition": self.proposition}


@dataclass(frozen=True)
class Triplet:
    subject: str
    relation: str
    object: str
    confidence: float = 1.0
    provenance: tuple[Provenance, ...] = ()

    def __post_init__(self):
        for name in ("subject", "relation", "object"):
            value = normalize_text(getattr(self, name))
            if not value:
                raise ValueError(f"triplet {name} is empty")
            object.__setattr__(self, name, value)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.relation, self.object)

    def to_record(self) -> dict:
        first = self.provenance[0] if self.provenance else Provenance("", "")
        return {
            "s": self.subject,
            "r": self.relation,
            "o": self.object,
            "confidence": self.confidence,
            "origin": first.origin,
            "source_id": first.source_id,
            "proposition": first.proposition,
            "provenance": [p.to_dict() for p in self.provenance],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Triplet":
        if rec.get("provenance"):
            prov = tuple(
                Provenance(p.get("source_id", ""), p.get("origin", ""), p.get("proposition"))
                for p in rec["provenance"]
            )
        else:
            prov = (Provenance(rec.get("source_id", ""), rec.get("origin", ""), rec.get("proposition")),)
        return cls(rec["s"], rec["r"], rec["o"], float(rec.get("confidence", 1.0)), prov)


def merge_triplets(triplets: Iterable[Triplet]) -> list[Triplet]:
    """Deduplicate on normalized (s, r, o).

    Duplicates keep the highest confidence and every distinct provenance
    record. Output is sorted by (subject, relation, object).
    """
    merged: dict[tuple[str, str, str], Triplet] = {}
    for t in triplets:
        seen = merged.get(t.key)
        if seen is None:
            merged[t.key] = t
            continue
        prov = tuple(sorted(set(seen.provenance) | set(t.provenance)))
        merged[t.key] = replace(seen, confidence=max(seen.confidence, t.confidence), provenance=prov)
    out = []
    for key in sorted(merged):
        t = merged[key]
        out.append(replace(t, provenance=tuple(sorted(set(t.provenance)))))
    return out


# ---------------------------------------------------------------------------
# reply parsing

_THINK = re.compile(r"<think>.*?</think>", re.S)


def parse_triplet_lines(reply: str) -> tuple[list[Triplet], int]:
    """Parse ``subject | predicate | object`` lines.

    Lines without exactly two pipes, or with an empty slot, are dropped.
    Returns the deduplicated triplets and the number of dropped lines.
    """
    triplets = []
    dropped = 0
    for line in _THINK.sub("", reply).splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split("|")
        if len(parts) != 3 or not all(normalize_text(p) for p in parts):
            dropped += 1
            continue
        triplets.append(Triplet(*parts))
    return merge_triplets(triplets), dropped


def match_label(reply: str, labels: Sequence[str]) -> str:
    """Map a classification reply onto ``labels``, else :data:`NO_RELATION`."""
    lines = [ln.strip() for ln in _THINK.sub("", reply).splitlines() if ln.strip()]
    if not lines:
        return NO_RELATION
    answer = lines[0]
    if answer in labels:
        return answer
    folded = answer.casefold()
    for label in labels:
        if label.casefold() == folded:
            return label
    return NO_RELATION


# ---------------------------------------------------------------------------
# backends


@dataclass
class Diagnostics:
    calls: int = 0
    dropped_lines: int = 0
    empty_responses: int = 0

    def to_dict(self) -> dict:
        return {"calls": self.calls, "dropped_lines": self.dropped_lines, "empty_responses": self.empty_responses}


class ExtractorBackend:
    kind = "base"

    def __init__(self):
        self.diagnostics = Diagnostics()
        self._lock = threading.Lock()

    def open_reply(self, text: str) -> str | list:
        raise NotImplementedError

    def classify_reply(self, text: str, e1: str, e2: str, labels: Sequence[str]) -> str:
        raise NotImplementedError

    def extract_open(self, text: str) -> list[Triplet]:
        reply = self.open_reply(text)
        if isinstance(reply, list):
            triplets, dropped = merge_triplets(_structured(reply)), 0
        else:
            triplets, dropped = parse_triplet_lines(reply)
        with self._lock:
            self.diagnostics.calls += 1
            self.diagnostics.dropped_lines += dropped
            self.diagnostics.empty_responses += not triplets
        return triplets

    def classify(self, text: str, e1: str, e2: str, labels: Sequence[str]) -> str:
        reply = self.classify_reply(text, e1, e2, labels)
        with self._lock:
            self.diagnostics.calls += 1
        return match_label(reply, labels)


def _structured(rows: list) -> list[Triplet]:
    out = []
    for row in rows:
        if isinstance(row, dict):
            out.append(Triplet(row["s"], row["r"], row["o"], float(row.get("confidence", 1.0))))
        else:
            conf = float(row[3]) if len(row) > 3 else 1.0
            out.append(Triplet(row[0], row[1], row[2], conf))
    return out


class RemoteExtractor(ExtractorBackend):
    kind = "remote"

    def __init__(self, config: RemoteConfig, client: httpx.Client | None = None):
        super().__init__()
        self.chat = ChatClient(config, client)

    def open_reply(self, text: str) -> str:
        return self.chat.complete(render(OPEN_IE_PROMPT, text=text))

    def classify_reply(self, text, e1, e2, labels) -> str:
        prompt = render(CLOSED_IE_PROMPT, text=text, e1=e1, e2=e2, labels=", ".join(labels))
        return self.chat.complete(prompt)


class ScriptedExtractor(ExtractorBackend):
    """Replays canned replies keyed on normalized input text.

    ``open_replies`` values are raw reply strings (parsed like model output)
    or lists of ``[s, r, o]`` / ``[s, r, o, confidence]`` rows. Unknown
    inputs get an empty reply.
    """

    kind = "scripted"

    def __init__(self, open_replies: Mapping[str, str | list] | None = None,
                 classify_replies: Mapping[str, str] | None = None):
        super().__init__()
        self.open_replies = {normalize_text(k): v for k, v in (open_replies or {}).items()}
        self.classify_replies = {normalize_text(k): v for k, v in (classify_replies or {}).items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedExtractor":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(data.get("open", {}), data.get("classify", {}))

    def open_reply(self, text: str):
        return self.open_replies.get(normalize_text(text), "")

    def classify_reply(self, text, e1, e2, labels) -> str:
        return self.classify_replies.get(normalize_text(text), "")


def make_extractor(spec: dict) -> ExtractorBackend:
    kind = spec.get("kind", "scripted")
    if kind == "scripted":
        return ScriptedExtractor.from_file(spec["transcript"])
    if kind == "remote":
        return RemoteExtractor(RemoteConfig.from_dict(spec))
    raise ValueError(f"unknown extractor backend {kind!r}")


def extract_open(text: str, backend: ExtractorBackend) -> list[Triplet]:
    if not normalize_text(text):
        raise ValueError("extract_open needs nonempty text")
    return backend.extract_open(text)


def classify_relation(text: str, e1: str, e2: str, labels: Sequence[str], backend: ExtractorBackend) -> str:
    if not labels:
        raise ValueError("label vocabulary is empty")
    return backend.classify(text, e1, e2, list(labels))


# ---------------------------------------------------------------------------
# configurations


@dataclass
class ExtractionTask:
    text: str
    mode: Mode = Mode.OPEN
    config: Config = Config.DIRECT
    source_id: str = ""
    e1: str = ""
    e2: str = ""
    labels: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.config = Config(self.config)
        if self.mode is Mode.CLOSED:
            if not self.labels:
                raise ValueError("closed IE needs a nonempty label vocabulary")
            if not (self.e1 and self.e2):
                raise ValueError("closed IE needs both entities")


class UsageError(ValueError):
    pass


def _extract_unit(text: str, task: ExtractionTask, backend: ExtractorBackend, prov: Provenance) -> list[Triplet]:
    if task.mode is Mode.OPEN:
        found = extract_open(text, backend)
    else:
        label = classify_relation(text, task.e1, task.e2, task.labels, backend)
        found = [] if label == NO_RELATION else [Triplet(task.e1, label, task.e2)]
    return [replace(t, provenance=(prov,)) for t in found]


def _direct(task: ExtractionTask, backend: ExtractorBackend) -> list[Triplet]:
    prov = Provenance(task.source_id, Origin.DIRECT.value)
    return merge_triplets(_extract_unit(task.text, task, backend, prov))


def _prop(task: ExtractionTask, atoms: AtomizationResult, backend: ExtractorBackend, concurrency: int) -> list[Triplet]:
    texts = sorted({p.text for p in atoms.atoms})

    def one(text: str) -> list[Triplet]:
        return _extract_unit(text, task, backend, Provenance(task.source_id, Origin.PROP.value, text))

    if concurrency > 1 and len(texts) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            chunks = list(pool.map(one, texts))
    else:
        chunks = [one(t) for t in texts]
    return merge_triplets(t for chunk in chunks for t in chunk)


def entities_found(triplets: Iterable[Triplet], e1: str, e2: str) -> bool:
    """True when a single triplet's subject/object fields contain both entities."""
    for t in triplets:
        slots = (t.subject, t.object)
        if any(e1 in s for s in slots) and any(e2 in s for s in slots):
            return True
    return False


def _soft_check(task: ExtractionTask, atoms: AtomizationResult | None) -> None:
    if task.mode is not Mode.CLOSED:
        return
    haystacks = [task.text] + ([p.text for p in atoms.atoms] if atoms else [])
    for entity in (task.e1, task.e2):
        if not any(entity in h for h in haystacks):
            msg = f"entity {entity!r} not found in text or atoms of {task.source_id!r}"
            logger.warning(msg)
            task.warnings.append(msg)


def run_config(
    task: ExtractionTask,
    atoms: AtomizationResult | None,
    backend: ExtractorBackend,
    concurrency: int = 4,
) -> list[Triplet]:
    """Run one extraction configuration; output is canonically sorted."""
    if task.config is Config.COMB and task.mode is not Mode.CLOSED:
        raise UsageError("the comb configuration is defined for closed IE only")
    if task.config is not Config.DIRECT and atoms is None:
        raise UsageError(f"the {task.config.value} configuration needs atomization results")
    _soft_check(task, atoms)
    if task.config is Config.DIRECT:
        return _direct(task, backend)
    if task.config is Config.PROP:
        return _prop(task, atoms, backend, concurrency)
    if task.config is Config.COMB:
        direct = _direct(task, backend)
        if entities_found(direct, task.e1, task.e2):
            return direct
        return _prop(task, atoms, backend, concurrency)
    direct = _direct(task, backend)
    prop = _prop(task, atoms, backend, concurrency)
    return merge_triplets(direct + prop)

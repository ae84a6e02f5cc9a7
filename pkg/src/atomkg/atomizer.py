"""Recursive propositioner: decompose text until every piece is a fixed point.

A string ``p`` is a fixed point of a backend when ``propose(p) == [p]``
after normalization. :func:`atomize` keeps re-proposing the current frontier
until it consists only of fixed points or the depth cap is hit, and returns
the fixed points it proved.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import httpx

from .prompts import PROPOSITIONER_PROMPT, render
from .remote import ChatClient, RemoteConfig, RemoteError

logger = logging.getLogger(__name__)

DEFAULT_CAP = 5
DEFAULT_CONCURRENCY = 4
REPROMPT_SUFFIX = "\nOutput ONLY the JSON array."


def normalize_text(raw: str) -> str:
    """NFC-normalize, trim, and collapse whitespace runs. Case is kept."""
    return " ".join(unicodedata.normalize("NFC", raw).split())


@dataclass(frozen=True, order=True)
class Proposition:
    text: str
    source_id: str = ""
    depth: int = 0
    proved_atomic: bool = False

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "source_id": self.source_id,
            "depth": self.depth,
            "proved_atomic": self.proved_atomic,
        }


class BackendKind(enum.Enum):
    REMOTE = "remote"
    RULE_BASED = "rules"
    SCRIPTED = "scripted"


class PropositionerBackend:
    """Maps text to candidate propositions.

    Subclasses implement ``_propose``; :meth:`propose` normalizes the output
    and drops strings that normalize to nothing.
    """

    kind: BackendKind

    def __init__(self):
        self.dropped_empty = 0

    def _propose(self, text: str) -> list[str]:
        raise NotImplementedError

    def propose(self, text: str) -> list[str]:
        out = []
        for item in self._propose(text):
            norm = normalize_text(item)
            if norm:
                out.append(norm)
            else:
                self.dropped_empty += 1
        return out


class ScriptedBackend(PropositionerBackend):
    """Replays a transcript keyed on normalized input text.

    ``script`` is either a mapping from input to output list or a callable.
    Inputs missing from a mapping are treated as fixed points unless
    ``on_missing="error"``.
    """

    kind = BackendKind.SCRIPTED

    def __init__(
        self,
        script: Mapping[str, Iterable[str]] | Callable[[str], Iterable[str]],
        on_missing: str = "identity",
    ):
        super().__init__()
        if on_missing not in ("identity", "error"):
            raise ValueError("on_missing must be 'identity' or 'error'")
        self.on_missing = on_missing
        if callable(script):
            self._fn = script
            self._table = None
        else:
            self._fn = None
            self._table = {normalize_text(k): list(v) for k, v in script.items()}

    @classmethod
    def from_file(cls, path: str | Path, on_missing: str = "identity") -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), on_missing=on_missing)

    def _propose(self, text: str) -> list[str]:
        if self._fn is not None:
            return list(self._fn(text))
        key = normalize_text(text)
        if key in self._table:
            return self._table[key]
        if self.on_missing == "error":
            raise KeyError(f"no scripted proposal for {key!r}")
        return [key]


class RuleBasedBackend(PropositionerBackend):
    kind = BackendKind.RULE_BASED

    def _propose(self, text: str) -> list[str]:
        return rule_based_split(text)


class RemoteBackend(PropositionerBackend):
    kind = BackendKind.REMOTE

    def __init__(self, config: RemoteConfig, title: str = "", client: httpx.Client | None = None):
        super().__init__()
        self.config = config
        self.title = title
        self._client = client

    def _propose(self, text: str) -> list[str]:
        return remote_propose(text, self.config, title=self.title, client=self._client)


# ---------------------------------------------------------------------------
# Algorithm


class AtomizationError(RuntimeError):
    """The backend failed; ``partial`` holds the state reached so far."""

    def __init__(self, message: str, partial: "AtomizationResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class AtomizationResult:
    """Outcome of :func:`atomize`.

    ``loop_iterations`` is the value of the loop counter at return.
    ``iterations_used`` counts decomposition rounds: the root round when the
    root proposal differs from the root text, plus every loop iteration,
    bounded by the cap.
    """

    atoms: tuple[Proposition, ...]
    iterations_used: int
    loop_iterations: int
    unproved_discarded: int
    backend_calls: int
    dropped_empty: int = 0
    warnings: tuple[str, ...] = ()
    source_id: str = ""

    @property
    def atom_texts(self) -> list[str]:
        return [p.text for p in self.atoms]

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "atoms": [p.to_dict() for p in self.atoms],
            "iterations_used": self.iterations_used,
            "loop_iterations": self.loop_iterations,
            "unproved_discarded": self.unproved_discarded,
            "backend_calls": self.backend_calls,
            "dropped_empty": self.dropped_empty,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AtomizationResult":
        source_id = data.get("source_id", "")
        atoms = tuple(
            Proposition(
                text=a["text"],
                source_id=a.get("source_id", source_id),
                depth=int(a.get("depth", 0)),
                proved_atomic=bool(a.get("proved_atomic", True)),
            )
            for a in data.get("atoms", [])
        )
        return cls(
            atoms=atoms,
            iterations_used=int(data.get("iterations_used", 0)),
            loop_iterations=int(data.get("loop_iterations", data.get("iterations_used", 0))),
            unproved_discarded=int(data.get("unproved_discarded", 0)),
            backend_calls=int(data.get("backend_calls", 0)),
            dropped_empty=int(data.get("dropped_empty", 0)),
            warnings=tuple(data.get("warnings", ())),
            source_id=source_id,
        )


@dataclass
class _Run:
    backend: PropositionerBackend
    concurrency: int
    memo: dict[str, list[str]] = field(default_factory=dict)
    calls: int = 0

    def call(self, text: str) -> list[str]:
        self.calls += 1
        return self.backend.propose(text)

    def check(self, frontier: set[str]) -> set[str]:
        """Propose every unseen string of ``frontier``; return its fixed points."""
        todo = sorted(s for s in frontier if s not in self.memo)
        if len(todo) > 1 and self.concurrency > 1:
            with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
                results = list(pool.map(self.backend.propose, todo))
            self.calls += len(todo)
        else:
            results = [self.call(s) for s in todo]
        for s, out in zip(todo, results):
            self.memo[s] = out
        return {s for s in frontier if self.memo[s] == [s]}


def atomize(
    text: str,
    backend: PropositionerBackend,
    cap: int = DEFAULT_CAP,
    source_id: str = "",
    concurrency: int = DEFAULT_CONCURRENCY,
) -> AtomizationResult:
    """Decompose ``text`` into proved fixed points of ``backend``.

    The frontier starts as ``propose(text)``; while it holds strings that are
    not fixed points and fewer than ``cap`` rounds have run, it is replaced
    by the union of proposals of all its members. Only the fixed points of
    the final frontier are returned. The root text itself is not checked.
    Proposals are memoized per normalized string within the call.
    """
    root = normalize_text(text)
    if not root:
        raise ValueError("cannot atomize empty text")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    run = _Run(backend, max(1, concurrency))
    dropped_before = backend.dropped_empty
    first_seen: dict[str, int] = {}
    frontier: set[str] = set()
    proved: set[str] = set()
    i = 0
    root_split = False

    def result(warnings: tuple[str, ...] = ()) -> AtomizationResult:
        atoms = tuple(
            Proposition(s, source_id=source_id, depth=first_seen[s], proved_atomic=True)
            for s in sorted(proved)
        )
        return AtomizationResult(
            atoms=atoms,
            iterations_used=min(cap, i + int(root_split)),
            loop_iterations=i,
            unproved_discarded=len(frontier - proved),
            backend_calls=run.calls,
            dropped_empty=backend.dropped_empty - dropped_before,
            warnings=warnings,
            source_id=source_id,
        )

    try:
        initial = run.call(root)
        if not initial:
            logger.warning("propositioner returned nothing for %r", source_id or root[:40])
            return result(("empty-root-proposal",))
        frontier = set(initial)
        root_split = frontier != {root}
        for s in frontier:
            first_seen.setdefault(s, 0)
        proved = run.check(frontier)
        while frontier != proved and i < cap:
            nxt: set[str] = set()
            for x in frontier:
                nxt.update(run.memo[x])
            for s in nxt:
                first_seen.setdefault(s, i + 1)
            frontier = nxt
            proved = run.check(frontier)
            i += 1
    except (RemoteError, OSError, KeyError, ValueError) as exc:
        raise AtomizationError(f"propositioner failed: {exc}", result(("backend-failure",))) from exc
    warnings = ("cap-reached",) if frontier != proved else ()
    return result(warnings)


# ---------------------------------------------------------------------------
# rule-based backend

_SENTENCE_BREAK = re.compile(r"(?<=[.!?]) +")
_NO_SPLIT = {"or", "nor", "either", "neither", "between", "both"}
_VERBS = {
    "is", "are", "was", "were", "be", "been", "am",
    "has", "have", "had", "do", "does", "did",
    "will", "would", "can", "could", "shall", "should", "may", "might", "must",
    "live", "lives", "lived", "work", "works", "worked",
    "like", "likes", "liked", "love", "loves", "loved",
    "own", "owns", "owned", "play", "plays", "played",
    "went", "go", "goes", "visited", "visit", "visits",
    "founded", "wrote", "won", "built", "lead", "leads", "led",
}


def _bare(token: str) -> str:
    return token.strip(".,;:!?\"'()").lower()


def _split_coordinated_subject(sentence: str) -> list[str]:
    tokens = sentence.split(" ")
    verb = next((k for k, t in enumerate(tokens) if _bare(t) in _VERBS), None)
    if verb is None:
        return [sentence]
    subject = [_bare(t) for t in tokens[:verb]]
    if subject.count("and") != 1 or _NO_SPLIT.intersection(subject):
        return [sentence]
    if any(t.endswith((",", ";")) for t in tokens[:verb]):
        return [sentence]
    a = subject.index("and")
    left, right, predicate = tokens[:a], tokens[a + 1 : verb], tokens[verb:]
    if not left or not right:
        return [sentence]
    if left[0][:1].isupper() and right[0][:1].islower():
        right = [right[0][:1].upper() + right[0][1:]] + right[1:]
    return [" ".join(left + predicate), " ".join(right + predicate)]


def rule_based_split(text: str) -> list[str]:
    """Deterministic offline propositioner.

    Splits sentences at ``.``, ``!`` or ``?`` followed by a space, then
    splits a subject of the form ``X and Y`` in front of the first verb from
    a small stop-list. Verb agreement is not repaired, and disjunctions are
    never split.
    """
    norm = normalize_text(text)
    if not norm:
        return []
    out: list[str] = []
    for sentence in _SENTENCE_BREAK.split(norm):
        if sentence:
            out.extend(_split_coordinated_subject(sentence))
    return out or [norm]


# ---------------------------------------------------------------------------
# remote backend


class MalformedOutputError(RemoteError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


_THINK = re.compile(r"<think>.*?</think>", re.S)
_FENCE = re.compile(r"^```(?:json)?\s*|\s*```$")


def parse_json_array(reply: str) -> list[str] | None:
    """Parse a model reply as a JSON array of strings, or return None."""
    body = _FENCE.sub("", _THINK.sub("", reply).strip()).strip()
    candidates = [body]
    lo, hi = body.find("["), body.rfind("]")
    if 0 <= lo < hi:
        candidates.append(body[lo : hi + 1])
    for candidate in candidates:
        try:
            value = json.loads(candidate)
        except ValueError:
            continue
        if isinstance(value, list) and all(isinstance(x, str) for x in value):
            return value
    return None


def remote_propose(
    text: str,
    endpoint: RemoteConfig,
    title: str = "",
    client: httpx.Client | None = None,
) -> list[str]:
    if not normalize_text(text):
        raise ValueError("remote_propose needs nonempty text")
    chat = ChatClient(endpoint, client)
    prompt = render(PROPOSITIONER_PROMPT, title=title, content=text)
    reply = chat.complete(prompt)
    parsed = parse_json_array(reply)
    if parsed is None:
        reply = chat.complete(prompt + REPROMPT_SUFFIX)
        parsed = parse_json_array(reply)
    if parsed is None:
        raise MalformedOutputError("propositioner reply is not a JSON array of strings", raw=reply)
    return [s for s in (normalize_text(x) for x in parsed) if s]


def make_backend(spec: dict) -> PropositionerBackend:
    """Build a backend from a config dict with a ``kind`` key."""
    kind = spec.get("kind", "rules")
    if kind == "rules":
        return RuleBasedBackend()
    if kind == "scripted":
        return ScriptedBackend.from_file(spec["transcript"], on_missing=spec.get("on_missing", "identity"))
    if kind == "remote":
        return RemoteBackend(RemoteConfig.from_dict(spec), title=spec.get("title", ""))
    raise ValueError(f"unknown propositioner backend {kind!r}")

import itertools
import json
import threading
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomkg.atomizer import (
    AtomizationError,
    AtomizationResult,
    RuleBasedBackend,
    ScriptedBackend,
    atomize,
    make_backend,
    normalize_text,
    parse_json_array,
    rule_based_split,
)


def test_normalize_text():
    assert normalize_text("  The cat  is here. ") == "The cat is here."
    assert normalize_text("") == ""
    decomposed = "S\u030cafov"
    assert normalize_text(decomposed) == unicodedata.normalize("NFC", decomposed) == "\u0160afov"
    assert normalize_text("a\t\nb") == "a b"
    assert normalize_text("Case Kept") == "Case Kept"


@pytest.mark.parametrize(
    "text, expected",
    [
        ("The cat and the dog are in the kitchen",
         ["The cat are in the kitchen", "The dog are in the kitchen"]),
        ("The cat or the dog is in the kitchen", ["The cat or the dog is in the kitchen"]),
        ("A. B.", ["A.", "B."]),
        ("Is it here? Yes! Fine.", ["Is it here?", "Yes!", "Fine."]),
        ("Either Ann and Bob won or nobody did.", ["Either Ann and Bob won or nobody did."]),
        ("Paris is lovely.", ["Paris is lovely."]),
        ("", []),
    ],
)
def test_rule_based_split(text, expected):
    assert rule_based_split(text) == expected


@given(st.lists(st.sampled_from(["the cat", "the dog", "and", "or", "is", "are", "here", "."]), max_size=12))
@settings(max_examples=200, deadline=None)
def test_rule_split_never_invents_disjunction_splits(words):
    text = " ".join(words)
    for part in rule_based_split(text):
        assert part.strip()
        # any " or " in the output was already in the input sentence
        if " or " in part:
            assert " or " in text


def test_cat_dog_trace():
    cat = "The cat and the dog are in the kitchen"
    parts = ["The cat is in the kitchen", "The dog is in the kitchen"]
    result = atomize(cat, ScriptedBackend({cat: parts}), source_id="s1")
    assert result.atom_texts == parts
    assert result.iterations_used == 1
    assert result.loop_iterations == 0
    assert result.backend_calls == 3
    assert all(p.proved_atomic and p.source_id == "s1" for p in result.atoms)
    assert result.warnings == ()


def test_identity_backend():
    result = atomize("Water is wet.", ScriptedBackend(lambda x: [x]))
    assert result.atom_texts == ["Water is wet."]
    assert (result.iterations_used, result.backend_calls, result.unproved_discarded) == (0, 2, 0)


def test_adversarial_hits_cap():
    counter = itertools.count()
    result = atomize("x", ScriptedBackend(lambda _: [f"n{next(counter)}", f"n{next(counter)}"]), cap=5)
    assert result.atoms == ()
    assert result.iterations_used == 5
    assert result.unproved_discarded == 64
    assert result.warnings == ("cap-reached",)


@pytest.mark.parametrize("cap", [1, 2, 3, 7])
def test_cap_bounds_iterations(cap):
    counter = itertools.count()
    result = atomize("x", ScriptedBackend(lambda _: [f"n{next(counter)}"]), cap=cap)
    assert result.iterations_used <= cap
    assert result.loop_iterations == cap
    assert result.backend_calls == cap + 2


def test_two_level_decomposition():
    script = {
        "root": ["a and b", "c"],
        "a and b": ["a", "b"],
    }
    result = atomize("root", ScriptedBackend(script))
    # c is proved in the first round but the frontier still holds "a and b"
    assert result.atom_texts == ["a", "b", "c"]
    assert result.iterations_used == 2
    assert {p.text: p.depth for p in result.atoms} == {"a": 1, "b": 1, "c": 0}


def test_empty_strings_are_dropped_and_counted():
    backend = ScriptedBackend({"root": ["a", "  ", ""]})
    result = atomize("root", backend)
    assert result.atom_texts == ["a"]
    assert result.dropped_empty == 2


def test_empty_root_proposal_warns():
    result = atomize("root", ScriptedBackend({"root": []}))
    assert result.atoms == ()
    assert result.warnings == ("empty-root-proposal",)


def test_empty_text_rejected():
    with pytest.raises(ValueError):
        atomize("   ", ScriptedBackend({}))
    with pytest.raises(ValueError):
        atomize("x", ScriptedBackend({}), cap=0)


def test_backend_failure_carries_partial_state():
    backend = ScriptedBackend({"root": ["a", "b"], "a": ["a"]}, on_missing="error")
    with pytest.raises(AtomizationError) as err:
        atomize("root", backend)
    assert err.value.partial.warnings == ("backend-failure",)
    assert err.value.partial.backend_calls >= 1


def test_memoization_counts_distinct_strings():
    calls = []
    lock = threading.Lock()

    def script(text):
        with lock:
            calls.append(text)
        return {"r": ["x", "y"], "x": ["z"], "y": ["z"]}.get(text, [text])

    result = atomize("r", ScriptedBackend(script), concurrency=4)
    assert sorted(calls) == sorted(set(calls))
    assert result.backend_calls == len(calls) == 4
    assert result.atom_texts == ["z"]


def test_atoms_are_fixed_points_and_idempotent():
    script = {"r": ["a b", "c"], "a b": ["a", "b"]}
    backend = ScriptedBackend(script)
    first = atomize("r", backend)
    for p in first.atoms:
        assert backend.propose(p.text) == [p.text]
    again = atomize(" ".join(first.atom_texts), ScriptedBackend({" ".join(first.atom_texts): first.atom_texts}))
    assert again.atom_texts == first.atom_texts


def test_scripted_from_file_and_make_backend(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"  spaced   out ": ["one", "two"]}), encoding="utf-8")
    backend = make_backend({"kind": "scripted", "transcript": str(path)})
    assert backend.propose("spaced out") == ["one", "two"]
    assert isinstance(make_backend({"kind": "rules"}), RuleBasedBackend)
    with pytest.raises(ValueError):
        make_backend({"kind": "nope"})


def test_result_roundtrip():
    result = atomize("A. B.", RuleBasedBackend(), source_id="d")
    back = AtomizationResult.from_dict(json.loads(json.dumps(result.to_dict())))
    assert back == result


@pytest.mark.parametrize(
    "reply, parsed",
    [
        ('["a", "b"]', ["a", "b"]),
        ('```json\n["a"]\n```', ["a"]),
        ('<think>hmm ["x"]</think>["a"]', ["a"]),
        ('Sure: ["a", "b"] done', ["a", "b"]),
        ("not json", None),
        ('{"a": 1}', None),
        ("[1, 2]", None),
    ],
)
def test_parse_json_array(reply, parsed):
    assert parse_json_array(reply) == parsed

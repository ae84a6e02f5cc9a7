"""Prompt templates sent to the remote models.

Line breaks and trailing spaces are part of the templates; do not reflow.
"""

import re

CLOSED_IE_PROMPT = (
    'Given the text, identify the relation \n'
    'between the two entities.\n'
    '\n'
    'Text: {text}\n'
    'Entity 1: {e1}\n'
    'Entity 2: {e2}\n'
    '\n'
    'Choose exactly one relation from \n'
    'this list: {labels}\n'
    '\n'
    'Answer with just the relation name, \n'
    'nothing else.\n'
)

OPEN_IE_PROMPT = (
    'Extract all factual \n'
    '(subject, predicate, object)\n'
    'triples from the sentence.\n'
    'One triple per line in the format:\n'
    'subject | predicate | object\n'
    'No explanations. If no triple can be \n'
    'extracted, write nothing.\n'
    '\n'
    'Sentence: {text}\n'
)

PROPOSITIONER_PROMPT = (
    'You are an expert in disambiguation \n'
    'and information extraction.\n'
    'You must decompose the text into \n'
    'atomic propositions (single facts) \n'
    'that are FULLY AUTONOMOUS.\n'
    '\n'
    'ABSOLUTE RULES:\n'
    '1. ZERO PRONOUNS: "He", "She", "They", \n'
    '   "His", "Her", "Its", "This one" \n'
    '   ARE FORBIDDEN.\n'
    '   ALWAYS replace them with the \n'
    '   full name of the entity.\n'
    '2. CONTEXT: Each sentence must be \n'
    '   readable alone without knowing \n'
    '   its source.\n'
    '3. REPETITION: Repeat the subject \n'
    '   in EACH sentence.\n'
    '\n'
    'OUTPUT FORMAT: Only a JSON array of \n'
    'strings.\n'
    '\n'
    'Title: {title}\n'
    'Content: {content}\n'
    'Output:\n'
)

_FIELD = re.compile(r"\{(\w+)\}")


def render(template: str, **fields: str) -> str:
    """Fill ``{name}`` placeholders in one pass; unknown names stay as-is."""
    return _FIELD.sub(lambda m: fields.get(m.group(1), m.group(0)), template)

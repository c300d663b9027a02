"""Query drafting: turn one under-specified query into context-enriched variants.

The prompt is few-shot with explicit reasoning: for each exemplar we show
the query, the reasoning steps that identify its missing context, and the
augmented outputs; the target query follows with an instruction to answer
as a JSON array of strings. A deterministic mock drafter (template
cross-product with a location gazetteer) stands in for the chat endpoint
so everything downstream is testable offline.
"""
from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

from .errors import ConfigurationError, DraftingError, IngestionError, ParseError, ValidationError

API_KEY_ENV = "RAPID_LLM_API_KEY"

DEFAULT_GENERATED = 6  # drafts requested from the model
DEFAULT_SELECTED = 4   # drafts an operator typically keeps


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class FewShotExample:
    """One prompt exemplar: query, reasoning steps, augmented outputs."""

    query: str
    cot: str
    augmented: tuple[str, ...]

    def validate(self) -> None:
        if not self.query.strip() or not self.cot.strip():
            raise ValidationError("few-shot example query and reasoning must be non-empty")
        if not self.augmented or any(not a.strip() for a in self.augmented):
            raise ValidationError(
                f"few-shot example {self.query!r} needs non-empty augmented outputs"
            )


@dataclass
class DraftSet:
    """Original query plus generated drafts and the operator's selection."""

    original: str
    generated: list[str] = field(default_factory=list)
    selected: list[int] = field(default_factory=list)

    def validate(self) -> None:
        if not self.original.strip():
            raise ValidationError("original query must be non-empty")
        normalized = [_normalize_ws(d) for d in self.generated]
        if any(not d for d in normalized):
            raise ValidationError("generated drafts must be non-empty")
        if len(set(normalized)) != len(normalized):
            raise ValidationError("generated drafts must be distinct after whitespace normalization")
        if self.generated:
            if not 1 <= len(self.selected) <= len(self.generated):
                raise ValidationError("selection must pick between 1 and all generated drafts")
            if any(i < 0 or i >= len(self.generated) for i in self.selected):
                raise ValidationError("selected indices out of range")

    @classmethod
    def from_generated(cls, original: str, generated: Sequence[str]) -> "DraftSet":
        ds = cls(original=original, generated=list(generated), selected=list(range(len(generated))))
        ds.validate()
        return ds

    def selected_queries(self) -> list[str]:
        return [self.generated[i] for i in self.selected]


def load_examples(path: str | Path) -> list[FewShotExample]:
    """Load exemplars from JSONL of {query, cot, augmented: [...]}."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read few-shot examples {path}: {exc}") from exc
    examples: list[FewShotExample] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            example = FewShotExample(
                query=str(obj["query"]),
                cot=str(obj["cot"]),
                augmented=tuple(str(a) for a in obj["augmented"]),
            )
            example.validate()
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed example: {exc}") from exc
        examples.append(example)
    return examples


def load_gazetteer(path: str | Path) -> list[str]:
    """Location phrases, one per line; blank lines and # comments skipped."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read gazetteer {path}: {exc}") from exc
    entries = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not entries:
        raise IngestionError(f"gazetteer {path} has no entries")
    return entries


def default_examples_path() -> Path:
    return Path(__file__).parent / "assets" / "fewshot_examples.jsonl"


def default_gazetteer_path() -> Path:
    return Path(__file__).parent / "assets" / "location_gazetteer.txt"


def build_prompt(examples: Sequence[FewShotExample], q0: str, n_drafts: int) -> str:
    """Deterministic few-shot prompt asking for n_drafts augmented queries."""
    if not examples:
        raise ConfigurationError("at least one few-shot example is required")
    if n_drafts < 1:
        raise ValidationError(f"n_drafts must be >= 1, got {n_drafts}")
    parts = [
        "You rewrite video event search queries by adding plausible contextual "
        "details, especially the likely location. Keep the original subject and "
        "action intact in every rewrite.",
        "",
    ]
    for i, example in enumerate(examples, start=1):
        example.validate()
        parts.append(f"Example {i}")
        parts.append(f"Query: {example.query}")
        parts.append(f"Reasoning: {example.cot}")
        parts.append("Augmented queries:")
        parts.extend(f"- {a}" for a in example.augmented)
        parts.append("")
    parts.append("Task")
    parts.append(f"Query: {q0}")
    parts.append(
        f"Respond with a JSON array of exactly {n_drafts} augmented query strings "
        "and nothing else."
    )
    return "\n".join(parts)


_LINE_PREFIX_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def parse_drafts(raw: str) -> list[str]:
    """Extract draft strings from a model response.

    Primary format is a JSON array of strings (possibly wrapped in prose or
    code fences); falls back to bulleted / numbered lines. Raises ParseError
    with the raw text when neither applies. An explicit empty array is a
    valid, empty result.
    """
    start, end = raw.find("["), raw.rfind("]")
    if start != -1 and end > start:
        try:
            parsed = json.loads(raw[start : end + 1])
        except json.JSONDecodeError:
            parsed = None
        if isinstance(parsed, list) and all(isinstance(x, str) for x in parsed):
            return parsed
    lines = []
    for line in raw.splitlines():
        stripped = _LINE_PREFIX_RE.sub("", line).strip()
        if _LINE_PREFIX_RE.match(line) and stripped:
            lines.append(stripped)
    if lines:
        return lines
    raise ParseError("could not parse drafts from model response", raw_text=raw)


def _postprocess(drafts: Sequence[str], n_drafts: int) -> list[str]:
    """Drop blanks, dedupe under whitespace normalization, cap at n_drafts."""
    seen: set[str] = set()
    out: list[str] = []
    for draft in drafts:
        key = _normalize_ws(draft)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(draft.strip())
        if len(out) >= n_drafts:
            break
    return out


class Drafter(Protocol):
    def generate(self, q0: str, n_drafts: int) -> list[str]: ...


def mock_draft(q0: str, gazetteer: Sequence[str], n_drafts: int) -> list[str]:
    """First n_drafts templates "<q0> <gazetteer entry>" in gazetteer order."""
    if not gazetteer:
        raise ConfigurationError("mock drafter requires a non-empty gazetteer")
    return [f"{q0} {entry}" for entry in gazetteer[:n_drafts]]


class MockDrafter:
    """Deterministic drafter backed by a location gazetteer."""

    def __init__(self, gazetteer: Sequence[str]):
        if not gazetteer:
            raise ConfigurationError("mock drafter requires a non-empty gazetteer")
        self.gazetteer = list(gazetteer)

    def generate(self, q0: str, n_drafts: int) -> list[str]:
        return mock_draft(q0, self.gazetteer, n_drafts)


class ChatDrafter:
    """Drafter backed by a chat-completions-compatible HTTP endpoint.

    Retries transport failures up to ``attempts`` times with exponential
    backoff, then raises DraftingError. Unparseable responses raise
    ParseError so callers can fall back to the original query.
    """

    def __init__(
        self,
        url: str,
        model: str,
        examples: Sequence[FewShotExample],
        api_key: Optional[str] = None,
        client=None,
        timeout: float = 60.0,
        attempts: int = 3,
        backoff_seconds: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        import httpx

        if not examples:
            raise ConfigurationError("chat drafter requires few-shot examples")
        self.url = url
        self.model = model
        self.examples = list(examples)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.attempts = attempts
        self.backoff_seconds = backoff_seconds
        self._sleep = sleep
        self._client = client or httpx.Client(timeout=timeout)

    def _request(self, prompt: str) -> str:
        import httpx

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            try:
                resp = self._client.post(self.url, json=payload, headers=headers)
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt + 1 < self.attempts:
                    self._sleep(self.backoff_seconds * (2**attempt))
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ParseError(f"unexpected chat response shape: {exc}") from exc
        raise DraftingError(
            f"chat endpoint {self.url} failed after {self.attempts} attempts: {last_error}"
        ) from last_error

    def generate(self, q0: str, n_drafts: int) -> list[str]:
        prompt = build_prompt(self.examples, q0, n_drafts)
        return parse_drafts(self._request(prompt))


def generate_drafts(q0: str, n_drafts: int, drafter: Drafter) -> list[str]:
    """Up to n_drafts cleaned, deduplicated augmented queries for q0."""
    if not q0 or not q0.strip():
        raise ValidationError("original query must be non-empty")
    if n_drafts < 1:
        raise ValidationError(f"n_drafts must be >= 1, got {n_drafts}")
    return _postprocess(drafter.generate(q0, n_drafts), n_drafts)

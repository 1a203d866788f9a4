"""Fact-tuple extraction: prompt construction, completion parsing, caching.

The extractor asks a chat model to rewrite each source text as a list of
``('subject', 'description')`` tuples, one provider call per text, and
parses whatever the model returns as tolerantly as possible. Raw
completions are cached by a content hash of the full request so repeat
runs never touch the network.
"""

from __future__ import annotations

import ast
import hashlib
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .cache import CompletionCache
from .errors import FactSimError, InvalidInputError, ParseFailureError, ProviderError
from .facts import FactSet, FactTuple
from .providers import ChatProvider

logger = logging.getLogger(__name__)

DEFAULT_MODEL_ID = "gpt-4"

# Operational prompt for tuple extraction. The input text is appended
# after the final header line.
EXTRACTION_PROMPT = (
    "Your task is to extract knowledge graph tuples from customer reviews "
    "and return them as a list. \n"
    "\n"
    "Tuples must adhere to the following rules:\n"
    "1. Tuple are represented as ('subject', 'description')\n"
    "2. The 'subject' is either the product being reviewed or a feature of "
    "the product. It must be one word.\n"
    "3. The 'description' must be one word, paraphrase it if needed\n"
    "\n"
    "### Customer reviews:"
)


@dataclass(frozen=True)
class ExtractionRequest:
    """Everything that determines one extraction completion."""

    model_id: str = DEFAULT_MODEL_ID
    input_text: str = ""
    temperature: float = 0.0
    prompt_template: str = EXTRACTION_PROMPT

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise InvalidInputError(f"temperature must be >= 0, got {self.temperature}")
        if not self.prompt_template:
            raise InvalidInputError("prompt template must be non-empty")

    def prompt(self) -> str:
        return f"{self.prompt_template}\n{self.input_text}"


def build_extraction_prompt(input_text: str) -> str:
    """Render the extraction prompt with the given text appended."""
    if not input_text or not input_text.strip():
        raise InvalidInputError("input text must be non-empty")
    return f"{EXTRACTION_PROMPT}\n{input_text}"


def cache_key(request: ExtractionRequest) -> str:
    """Content hash identifying a request; stable across runs and machines."""
    canonical = json.dumps(
        {
            "model_id": request.model_id,
            "temperature": request.temperature,
            "prompt_template": request.prompt_template,
            "input_text": request.input_text,
        },
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class ParseStats:
    """Counters for tolerated oddities in completion output."""

    skipped: int = 0          # candidate tuples without exactly 2 elements
    multiword_kept: int = 0   # tuples kept although a field has several words


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\s*\n(.*?)```", re.DOTALL)
# Innermost bracket group: brackets with no nested brackets inside.
_GROUP_RE = re.compile(r"[\[(]([^\[\]()]*)[\])]")
_QUOTED_ITEM_RE = re.compile(r"""['"]([^'"]*)['"]""")


def _strip_code_fences(text: str) -> str:
    blocks = _FENCE_RE.findall(text)
    if blocks:
        return "\n".join(blocks)
    return text


def _balanced_span(text: str, open_ch: str, close_ch: str) -> str | None:
    start = text.find(open_ch)
    if start == -1:
        return None
    depth = 0
    for i in range(start, len(text)):
        if text[i] == open_ch:
            depth += 1
        elif text[i] == close_ch:
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _tuple_from_pair(first: object, second: object, stats: ParseStats) -> FactTuple | None:
    try:
        fact = FactTuple(str(first), str(second))
    except InvalidInputError:
        stats.skipped += 1
        logger.warning("skipping tuple with empty field: (%r, %r)", first, second)
        return None
    if " " in fact.subject or " " in fact.description:
        stats.multiword_kept += 1
        logger.warning("keeping multi-word tuple (%s, %s)", fact.subject, fact.description)
    return fact


def _tuples_from_value(value: object, stats: ParseStats) -> list[FactTuple] | None:
    """Interpret a literal-eval result as a tuple list, or None if it is not one."""
    if not isinstance(value, (list, tuple)):
        return None
    items = list(value)
    # A flat 2-element pair of scalars is a single tuple, not two items.
    if len(items) == 2 and all(isinstance(x, (str, int, float)) for x in items):
        fact = _tuple_from_pair(items[0], items[1], stats)
        return [fact] if fact else []
    facts: list[FactTuple] = []
    for item in items:
        if isinstance(item, (list, tuple)) and len(item) == 2:
            fact = _tuple_from_pair(item[0], item[1], stats)
            if fact:
                facts.append(fact)
        else:
            stats.skipped += 1
            logger.warning("skipping malformed tuple item: %r", item)
    return facts


def _split_group_items(content: str) -> list[str]:
    """Split an innermost bracket group on commas, honoring quotes."""
    quoted = _QUOTED_ITEM_RE.findall(content)
    if quoted:
        return quoted
    return [part.strip() for part in content.split(",") if part.strip()]


def parse_tuple_list(raw: str, stats: ParseStats | None = None) -> list[FactTuple]:
    """Recover (subject, description) tuples from completion text.

    Tolerates square or round brackets, single or double quotes, code
    fences, and surrounding prose. Candidate tuples with anything other
    than two elements are skipped and counted in ``stats``. Raises
    ParseFailureError when no tuple structure exists anywhere in ``raw``.
    """
    if stats is None:
        stats = ParseStats()
    text = _strip_code_fences(raw).strip()

    candidates = [text]
    for open_ch, close_ch in (("[", "]"), ("(", ")")):
        span = _balanced_span(text, open_ch, close_ch)
        if span and span != text:
            candidates.append(span)
    for candidate in candidates:
        try:
            value = ast.literal_eval(candidate)
        except (ValueError, SyntaxError, MemoryError, RecursionError):
            continue
        facts = _tuples_from_value(value, stats)
        if facts is not None:
            return facts

    # Fallback: scan innermost bracket groups, splitting items on quotes
    # or commas. Handles unquoted or partially quoted output.
    facts = []
    structure_seen = False
    for match in _GROUP_RE.finditer(text):
        items = _split_group_items(match.group(1))
        if len(items) == 2:
            structure_seen = True
            fact = _tuple_from_pair(items[0], items[1], stats)
            if fact:
                facts.append(fact)
        elif len(items) > 2 or (len(items) == 1 and "," in match.group(1)):
            structure_seen = True
            stats.skipped += 1
            logger.warning("skipping malformed tuple group: %r", match.group(0))
    if structure_seen:
        return facts

    raise ParseFailureError(
        f"no tuple structure found in completion: {raw[:200]!r}", raw=raw
    )


@dataclass(frozen=True)
class ExtractionFailure:
    """One text that could not be extracted, and why."""

    text_index: int
    kind: str  # "provider" or "parse"
    error: str


def _fetch_completion(
    request: ExtractionRequest,
    provider: ChatProvider,
    cache: CompletionCache | None,
) -> str:
    key = cache_key(request)
    if cache is not None:
        cached = cache.get(key)
        if cached is not None:
            return cached
    messages = [{"role": "user", "content": request.prompt()}]
    raw = provider.complete(request.model_id, messages, request.temperature)
    if cache is not None:
        cache.put(
            key,
            raw,
            {
                "model_id": request.model_id,
                "temperature": request.temperature,
                "input_text": request.input_text,
            },
        )
    return raw


def _extract_all(
    texts: Sequence[str],
    provider: ChatProvider,
    request_config: ExtractionRequest,
    cache: CompletionCache | None,
    max_inflight: int,
    stats: ParseStats,
) -> tuple[list[list[FactTuple]], list[ExtractionFailure]]:
    """Run extraction over all texts; results and failures in input order."""
    requests_by_index = [replace(request_config, input_text=text) for text in texts]
    raws: list[str | ExtractionFailure] = [None] * len(texts)  # type: ignore[list-item]

    def fetch(index: int) -> None:
        try:
            raws[index] = _fetch_completion(requests_by_index[index], provider, cache)
        except ProviderError as exc:
            raws[index] = ExtractionFailure(index, "provider", str(exc))

    workers = max(1, min(max_inflight, len(texts)))
    if workers == 1:
        for i in range(len(texts)):
            fetch(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(fetch, range(len(texts))))

    per_text: list[list[FactTuple]] = []
    failures: list[ExtractionFailure] = []
    for index, raw in enumerate(raws):
        if isinstance(raw, ExtractionFailure):
            failures.append(raw)
            per_text.append([])
            continue
        try:
            per_text.append(parse_tuple_list(raw, stats))
        except ParseFailureError as exc:
            failures.append(ExtractionFailure(index, "parse", str(exc)))
            per_text.append([])
    return per_text, failures


def _assemble(per_text: Sequence[Sequence[FactTuple]]) -> FactSet:
    tuples: list[FactTuple] = []
    provenance: list[int] = []
    for index, facts in enumerate(per_text):
        tuples.extend(facts)
        provenance.extend([index] * len(facts))
    return FactSet(tuples=tuple(tuples), provenance=tuple(provenance))


def extract_facts(
    texts: Sequence[str],
    provider: ChatProvider,
    request_config: ExtractionRequest | None = None,
    cache: CompletionCache | None = None,
    max_inflight: int = 4,
    stats: ParseStats | None = None,
) -> FactSet:
    """Extract fact tuples from every text, one provider call per text.

    Results are concatenated in input order with per-text provenance.
    The first failing text (in input order) raises; use
    extract_facts_partial for continue-on-error behavior.
    """
    if not texts:
        raise InvalidInputError("texts must be non-empty")
    if stats is None:
        stats = ParseStats()
    config = request_config or ExtractionRequest()
    per_text, failures = _extract_all(texts, provider, config, cache, max_inflight, stats)
    if failures:
        first = failures[0]
        if first.kind == "provider":
            raise ProviderError(
                f"extraction failed for text {first.text_index}: {first.error}",
                text_index=first.text_index,
            )
        raise ParseFailureError(
            f"extraction failed for text {first.text_index}: {first.error}",
            text_index=first.text_index,
        )
    return _assemble(per_text)


def extract_facts_partial(
    texts: Sequence[str],
    provider: ChatProvider,
    request_config: ExtractionRequest | None = None,
    cache: CompletionCache | None = None,
    max_inflight: int = 4,
    stats: ParseStats | None = None,
) -> tuple[FactSet, list[ExtractionFailure]]:
    """Like extract_facts, but failed texts are reported instead of raised.

    Provenance indices of the surviving tuples still refer to positions
    in the original ``texts`` sequence.
    """
    if not texts:
        raise InvalidInputError("texts must be non-empty")
    if stats is None:
        stats = ParseStats()
    config = request_config or ExtractionRequest()
    per_text, failures = _extract_all(texts, provider, config, cache, max_inflight, stats)
    return _assemble(per_text), failures

"""Benchmark harness: datasets, Kendall's tau, metric-vs-human correlation.

A dataset is JSONL, one sample per line, each carrying K source reviews,
per-system summaries, and per-system human ratings along four dimensions.
The harness scores every (sample, system) cell with one metric and
reports rank correlations against the human ratings at two levels:

* system level: one point per system (metric mean vs human mean over
  samples), correlated across systems;
* summary level: within each sample, correlate across systems, then
  average the per-sample coefficients.

Cells whose metric computation fails are skipped with a logged reason and
never silently zeroed; correlations run over the surviving intersection.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

from ._version import __version__
from .cache import CompletionCache
from .errors import FactSimError, InvalidInputError
from .extraction import ExtractionRequest, extract_facts
from .facts import FactSet
from .providers import ChatProvider, EncoderProvider
from .rouge import rouge_l, rouge_n
from .scoring import score as score_fact_sets

logger = logging.getLogger(__name__)

DIMENSIONS = (
    "aspect_relevance",
    "self_coherence",
    "sentiment_consistency",
    "readability",
)


@dataclass(frozen=True)
class BenchmarkSample:
    """One evaluation unit: reviews, per-system summaries, human ratings."""

    sample_id: str
    reviews: tuple[str, ...]
    system_summaries: dict[str, str]
    human_scores: dict[str, dict[str, float]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "reviews", tuple(self.reviews))
        if len(self.reviews) < 1:
            raise InvalidInputError(f"sample {self.sample_id!r}: needs at least one review")
        missing = set(self.human_scores) - set(self.system_summaries)
        if missing:
            raise InvalidInputError(
                f"sample {self.sample_id!r}: human scores for systems without "
                f"summaries: {sorted(missing)}"
            )
        for system, scores in self.human_scores.items():
            absent = [dim for dim in DIMENSIONS if dim not in scores]
            if absent:
                raise InvalidInputError(
                    f"sample {self.sample_id!r}, system {system!r}: missing "
                    f"dimensions {absent}"
                )


def _sample_from_obj(obj: Any) -> BenchmarkSample:
    if not isinstance(obj, dict):
        raise InvalidInputError("sample must be a JSON object")
    try:
        sample_id = str(obj["sample_id"])
        reviews = obj["reviews"]
        system_summaries = obj["system_summaries"]
        human_scores = obj["human_scores"]
    except KeyError as exc:
        raise InvalidInputError(f"missing field {exc.args[0]!r}") from exc
    if not isinstance(reviews, list) or not all(isinstance(r, str) for r in reviews):
        raise InvalidInputError("'reviews' must be a list of strings")
    if not isinstance(system_summaries, dict) or not all(
        isinstance(v, str) for v in system_summaries.values()
    ):
        raise InvalidInputError("'system_summaries' must map system name to text")
    if not isinstance(human_scores, dict):
        raise InvalidInputError("'human_scores' must map system name to ratings")
    parsed_scores: dict[str, dict[str, float]] = {}
    for system, ratings in human_scores.items():
        if not isinstance(ratings, dict):
            raise InvalidInputError(f"ratings for system {system!r} must be an object")
        try:
            parsed_scores[system] = {dim: float(ratings[dim]) for dim in DIMENSIONS}
        except KeyError as exc:
            raise InvalidInputError(
                f"system {system!r} is missing dimension {exc.args[0]!r}"
            ) from exc
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"system {system!r} has a non-numeric rating") from exc
    return BenchmarkSample(
        sample_id=sample_id,
        reviews=tuple(reviews),
        system_summaries=dict(system_summaries),
        human_scores=parsed_scores,
    )


def load_dataset(path: str | Path) -> list[BenchmarkSample]:
    """Load and validate a JSONL benchmark dataset."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"dataset file not found: {path}")
    samples: list[BenchmarkSample] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}, line {line_no}: invalid JSON: {exc}") from exc
            try:
                samples.append(_sample_from_obj(obj))
            except InvalidInputError as exc:
                raise InvalidInputError(f"{path}, line {line_no}: {exc}") from exc
    return samples


def _sign(delta: float) -> int:
    if delta > 0:
        return 1
    if delta < 0:
        return -1
    return 0


def kendall_tau(x: Sequence[float], y: Sequence[float], variant: str = "b") -> float:
    """Kendall rank correlation by explicit pair counting.

    variant "b" applies the tie correction
    (C - D) / sqrt((C + D + Tx)(C + D + Ty)), with Tx/Ty counting pairs
    tied only in x / only in y; it is an error when either factor is zero
    (one vector tied throughout). variant "a" divides by n(n-1)/2.
    """
    if variant not in ("a", "b"):
        raise InvalidInputError(f"tau variant must be 'a' or 'b', got {variant!r}")
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise InvalidInputError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise InvalidInputError("kendall_tau needs at least 2 points")
    concordant = discordant = tied_x_only = tied_y_only = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = _sign(xs[j] - xs[i])
            dy = _sign(ys[j] - ys[i])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tied_x_only += 1
            elif dy == 0:
                tied_y_only += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    if variant == "a":
        return (concordant - discordant) / (n * (n - 1) / 2)
    denom_x = concordant + discordant + tied_x_only
    denom_y = concordant + discordant + tied_y_only
    if denom_x == 0 or denom_y == 0:
        raise InvalidInputError("kendall_tau is undefined: all pairs tied in one vector")
    return (concordant - discordant) / (denom_x * denom_y) ** 0.5


class SummaryMetric(Protocol):
    """A reference-free metric scoring one summary against source reviews."""

    name: str

    def score(self, reviews: Sequence[str], summary: str) -> float:
        ...


class RougeMetric:
    """ROUGE scored reference-free against the concatenated reviews."""

    def __init__(self, order: int | str):
        if order not in (1, 2, "l"):
            raise InvalidInputError(f"unsupported ROUGE order: {order!r}")
        self.order = order
        self.name = f"rouge-{order}"

    def score(self, reviews: Sequence[str], summary: str) -> float:
        reference = "\n".join(reviews)
        if self.order == "l":
            return rouge_l(reference, summary)
        return rouge_n(reference, summary, int(self.order))


class FactSimMetric:
    """Extract tuples from reviews and summary, embed, and score.

    Review-tuple extraction is memoized per review set within a run so
    the K reviews are extracted once per sample, not once per system.
    """

    name = "factsim"

    def __init__(
        self,
        provider: ChatProvider,
        encoder: EncoderProvider,
        request_config: ExtractionRequest | None = None,
        cache: CompletionCache | None = None,
        max_inflight: int = 4,
    ):
        self.provider = provider
        self.encoder = encoder
        self.request_config = request_config or ExtractionRequest()
        self.cache = cache
        self.max_inflight = max_inflight
        self._review_facts: dict[tuple[str, ...], FactSet | FactSimError] = {}

    def _facts_for_reviews(self, reviews: tuple[str, ...]) -> FactSet:
        cached = self._review_facts.get(reviews)
        if cached is None:
            try:
                cached = extract_facts(
                    list(reviews), self.provider, self.request_config,
                    cache=self.cache, max_inflight=self.max_inflight,
                )
            except FactSimError as exc:
                cached = exc
            self._review_facts[reviews] = cached
        if isinstance(cached, FactSimError):
            raise cached
        return cached

    def score(self, reviews: Sequence[str], summary: str) -> float:
        review_facts = self._facts_for_reviews(tuple(reviews))
        summary_facts = extract_facts(
            [summary], self.provider, self.request_config,
            cache=self.cache, max_inflight=self.max_inflight,
        )
        return score_fact_sets(review_facts, summary_facts, self.encoder).factsim


def make_metric(
    name: str,
    provider: ChatProvider | None = None,
    encoder: EncoderProvider | None = None,
    request_config: ExtractionRequest | None = None,
    cache: CompletionCache | None = None,
    max_inflight: int = 4,
) -> SummaryMetric:
    """Build a metric adapter by name: factsim, rouge-1, rouge-2, rouge-l."""
    if name == "factsim":
        if provider is None or encoder is None:
            raise InvalidInputError("factsim metric requires a provider and an encoder")
        return FactSimMetric(provider, encoder, request_config, cache, max_inflight)
    if name in ("rouge-1", "rouge-2"):
        return RougeMetric(int(name[-1]))
    if name == "rouge-l":
        return RougeMetric("l")
    raise InvalidInputError(f"unknown metric {name!r}")


@dataclass(frozen=True)
class SkippedCell:
    sample_id: str
    system: str
    reason: str


@dataclass(frozen=True)
class DimensionResult:
    """Correlation outcomes for one human-judgment dimension."""

    system_level_tau: float | None
    summary_level_tau: float | None
    n_samples_used: int      # samples with a defined within-sample tau
    n_samples_skipped: int   # samples skipped at summary level


@dataclass(frozen=True)
class CorrelationReport:
    metric: str
    tau_variant: str
    n_samples: int
    n_systems: int
    n_systems_used: int
    n_common_samples: int
    dimensions: dict[str, DimensionResult] = field(default_factory=dict)
    skipped_cells: tuple[SkippedCell, ...] = ()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "tool_version": __version__,
            "metric": self.metric,
            "tau_variant": self.tau_variant,
            "n_samples": self.n_samples,
            "n_systems": self.n_systems,
            "n_systems_used": self.n_systems_used,
            "n_common_samples": self.n_common_samples,
            "dimensions": {
                dim: {
                    "system_level_tau": res.system_level_tau,
                    "summary_level_tau": res.summary_level_tau,
                    "n_samples_used": res.n_samples_used,
                    "n_samples_skipped": res.n_samples_skipped,
                }
                for dim, res in self.dimensions.items()
            },
            "skipped_cells": [
                {"sample_id": c.sample_id, "system": c.system, "reason": c.reason}
                for c in self.skipped_cells
            ],
        }

    def to_csv(self) -> str:
        """One row per metric, sys/sum columns per dimension."""
        header = ["metric"]
        for dim in DIMENSIONS:
            header += [f"{dim}_sys", f"{dim}_sum"]
        row = [self.metric]
        for dim in DIMENSIONS:
            res = self.dimensions[dim]
            row.append("" if res.system_level_tau is None else repr(res.system_level_tau))
            row.append("" if res.summary_level_tau is None else repr(res.summary_level_tau))
        return "\n".join([",".join(header), ",".join(row)]) + "\n"


def evaluate_benchmark(
    samples: Sequence[BenchmarkSample],
    metric: SummaryMetric,
    tau_variant: str = "b",
) -> CorrelationReport:
    """Score every (sample, system) cell and correlate with human ratings."""
    if not samples:
        raise InvalidInputError("benchmark needs at least one sample")
    system_sets = [set(s.human_scores) for s in samples]
    systems = sorted(set.intersection(*system_sets))
    if len(systems) < 2:
        raise InvalidInputError(
            f"benchmark needs at least 2 systems shared by all samples, got {len(systems)}"
        )

    cells: dict[tuple[str, str], float] = {}
    skipped: list[SkippedCell] = []
    for sample in samples:
        for system in systems:
            try:
                cells[(sample.sample_id, system)] = metric.score(
                    sample.reviews, sample.system_summaries[system]
                )
            except FactSimError as exc:
                skipped.append(SkippedCell(sample.sample_id, system, str(exc)))
                logger.warning(
                    "skipping sample %r, system %r: %s", sample.sample_id, system, exc
                )

    # System level: restrict to samples surviving for every kept system so
    # the per-system means stay comparable.
    surviving: dict[str, set[str]] = {
        system: {s.sample_id for s in samples if (s.sample_id, system) in cells}
        for system in systems
    }
    systems_used = [system for system in systems if surviving[system]]
    if systems_used:
        common_ids = set.intersection(*(surviving[s] for s in systems_used))
    else:
        common_ids = set()
    common_samples = [s for s in samples if s.sample_id in common_ids]

    dimensions: dict[str, DimensionResult] = {}
    for dim in DIMENSIONS:
        system_tau: float | None = None
        if len(systems_used) >= 2 and common_samples:
            metric_means = [
                sum(cells[(s.sample_id, system)] for s in common_samples) / len(common_samples)
                for system in systems_used
            ]
            human_means = [
                sum(s.human_scores[system][dim] for s in common_samples) / len(common_samples)
                for system in systems_used
            ]
            try:
                system_tau = kendall_tau(metric_means, human_means, tau_variant)
            except InvalidInputError as exc:
                logger.warning("system-level tau undefined for %s: %s", dim, exc)

        taus: list[float] = []
        skipped_samples = 0
        for sample in samples:
            present = [s for s in systems if (sample.sample_id, s) in cells]
            if len(present) < 2:
                skipped_samples += 1
                continue
            metric_values = [cells[(sample.sample_id, s)] for s in present]
            human_values = [sample.human_scores[s][dim] for s in present]
            try:
                taus.append(kendall_tau(metric_values, human_values, tau_variant))
            except InvalidInputError:
                skipped_samples += 1
        summary_tau = sum(taus) / len(taus) if taus else None
        dimensions[dim] = DimensionResult(
            system_level_tau=system_tau,
            summary_level_tau=summary_tau,
            n_samples_used=len(taus),
            n_samples_skipped=skipped_samples,
        )

    return CorrelationReport(
        metric=metric.name,
        tau_variant=tau_variant,
        n_samples=len(samples),
        n_systems=len(systems),
        n_systems_used=len(systems_used),
        n_common_samples=len(common_samples),
        dimensions=dimensions,
        skipped_cells=tuple(skipped),
    )

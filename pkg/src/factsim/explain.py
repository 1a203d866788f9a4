"""Post-hoc analysis over score reports.

Three views of a scored summary: how often each claim repeats across the
source reviews (greedy similarity clustering), which review claims the
summary missed and which summary claims have no support in the reviews
(threshold on best-match similarity), and plot-ready exports of the
similarity matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .embedding import EmbeddedFactSet, clamped_cosine
from .errors import InvalidInputError
from .facts import FactTuple
from .scoring import ScoreReport, matrix_to_csv

DEFAULT_THRESHOLD = 0.75


@dataclass(frozen=True)
class ClaimCluster:
    """A group of similar review claims; frequency is its member count."""

    representative: FactTuple
    members: tuple[tuple[int, int], ...]  # (tuple index, source index)

    @property
    def frequency(self) -> int:
        return len(self.members)


def cluster_claims(reviews: EmbeddedFactSet, threshold: float) -> list[ClaimCluster]:
    """Greedy single-pass clustering of review tuples.

    Each tuple, in order, joins the first existing cluster whose
    representative is at least ``threshold`` similar, otherwise founds a
    new cluster. Representatives are therefore always real extracted
    tuples. Returned sorted by descending frequency (founding order on
    ties). Order-dependent by design: deterministic and linear-pass.
    """
    if not 0.0 < threshold <= 1.0:
        raise InvalidInputError(f"cluster threshold must be in (0, 1], got {threshold}")
    clusters: list[dict[str, Any]] = []
    for index, fact in enumerate(reviews.facts):
        vector = reviews.vectors[index]
        source = reviews.facts.provenance[index]
        for cluster in clusters:
            if clamped_cosine(cluster["vector"], vector) >= threshold:
                cluster["members"].append((index, source))
                break
        else:
            clusters.append(
                {"representative": fact, "vector": vector, "members": [(index, source)]}
            )
    clusters.sort(key=lambda c: -len(c["members"]))
    return [
        ClaimCluster(representative=c["representative"], members=tuple(c["members"]))
        for c in clusters
    ]


@dataclass(frozen=True)
class CoverageFindings:
    """Claims below the match threshold on either side of the comparison."""

    uncovered_review_claims: tuple[tuple[FactTuple, float, int], ...]  # (tuple, best sim, frequency)
    unsupported_summary_claims: tuple[tuple[FactTuple, float], ...]    # (tuple, best sim)
    threshold: float

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "uncovered_review_claims": [
                {
                    "subject": fact.subject,
                    "description": fact.description,
                    "best_similarity": best,
                    "frequency": freq,
                }
                for fact, best, freq in self.uncovered_review_claims
            ],
            "unsupported_summary_claims": [
                {
                    "subject": fact.subject,
                    "description": fact.description,
                    "best_similarity": best,
                }
                for fact, best in self.unsupported_summary_claims
            ],
        }


def coverage_findings(
    report: ScoreReport,
    review_clusters: list[ClaimCluster],
    threshold: float = DEFAULT_THRESHOLD,
) -> CoverageFindings:
    """List review claims the summary missed and summary claims without support.

    Review claims come annotated with their cluster frequency as a
    relevance weight; ``review_clusters`` must derive from the same review
    fact set the report was scored on.
    """
    if not 0.0 < threshold <= 1.0:
        raise InvalidInputError(f"findings threshold must be in (0, 1], got {threshold}")
    frequency_by_index: dict[int, int] = {}
    for cluster in review_clusters:
        for tuple_index, _source in cluster.members:
            frequency_by_index[tuple_index] = cluster.frequency
    n_review = len(report.review_facts)
    if set(frequency_by_index) != set(range(n_review)):
        raise InvalidInputError(
            "clusters do not cover the report's review tuples exactly; "
            "they must derive from the same fact set"
        )

    uncovered = tuple(
        (report.review_facts.tuples[i], best, frequency_by_index[i])
        for i, (_j, best) in enumerate(report.best_match_per_review_tuple)
        if best < threshold
    )
    unsupported = tuple(
        (report.summary_facts.tuples[j], best)
        for j, (_i, best) in enumerate(report.best_match_per_summary_tuple)
        if best < threshold
    )
    return CoverageFindings(
        uncovered_review_claims=uncovered,
        unsupported_summary_claims=unsupported,
        threshold=threshold,
    )


def export_matrix(report: ScoreReport, format: str) -> bytes:
    """Labeled similarity matrix as CSV or JSON bytes for external plotting."""
    if format == "csv":
        return matrix_to_csv(report.matrix).encode("utf-8")
    if format == "json":
        payload = {
            "row_labels": list(report.matrix.row_labels),
            "col_labels": list(report.matrix.col_labels),
            "values": report.matrix.values.tolist(),
        }
        return json.dumps(payload, indent=2).encode("utf-8")
    raise InvalidInputError(f"unsupported export format {format!r} (want csv or json)")


def clusters_to_json(clusters: list[ClaimCluster]) -> list[dict[str, Any]]:
    """JSON-ready view of claim clusters, highest frequency first."""
    return [
        {
            "subject": c.representative.subject,
            "description": c.representative.description,
            "frequency": c.frequency,
            "members": [
                {"tuple_index": ti, "source": si} for ti, si in c.members
            ],
        }
        for c in clusters
    ]

"""The metric core: similarity matrix, coverage, consistency, FactSim.

Coverage is the mean over review tuples of the best similarity to any
summary tuple; consistency is the column-wise mirror (mean over summary
tuples of the best similarity to any review tuple); FactSim is their
harmonic mean. Values live in [0, 1] throughout.

Numerical discipline: matrix cells are computed pairwise (one dot product
per cell, never a blocked matrix product) and the means sum their inputs
in sorted order. Both choices make scores bit-identical under any
permutation of the tuples and under swapping the two fact sets.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from ._version import __version__
from .embedding import EmbeddedFactSet, embed
from .errors import EmptyExtractionError, InvalidInputError
from .facts import FactSet
from .providers import EncoderProvider


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Pairwise clamped-cosine similarities, review tuples x summary tuples."""

    values: np.ndarray  # shape (N, M), all in [0, 1]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidInputError(f"similarity matrix must be 2-dimensional, got {values.shape}")
        if values.shape != (len(self.row_labels), len(self.col_labels)):
            raise InvalidInputError(
                f"matrix shape {values.shape} does not match labels "
                f"({len(self.row_labels)} x {len(self.col_labels)})"
            )
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise InvalidInputError("similarity values must lie in [0, 1]")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.values.shape[1])


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / norms


def similarity_matrix(reviews: EmbeddedFactSet, summary: EmbeddedFactSet) -> SimilarityMatrix:
    """Clamped cosine between every review tuple and every summary tuple."""
    if len(reviews) == 0 or len(summary) == 0:
        raise InvalidInputError("similarity matrix requires non-empty fact sets on both sides")
    if reviews.encoder_id != summary.encoder_id:
        raise InvalidInputError(
            f"encoder mismatch: {reviews.encoder_id!r} vs {summary.encoder_id!r}"
        )
    if reviews.dim != summary.dim:
        raise InvalidInputError(f"dimension mismatch: {reviews.dim} vs {summary.dim}")

    r_unit = _unit_rows(reviews.vectors)
    s_unit = _unit_rows(summary.vectors)
    # Cell-by-cell dot products: a blocked matrix product is faster but its
    # rounding depends on row position, which would break bit-exact
    # permutation invariance of the scores.
    values = np.empty((len(reviews), len(summary)), dtype=np.float64)
    for i in range(len(reviews)):
        for j in range(len(summary)):
            if np.array_equal(r_unit[i], s_unit[j]):
                values[i, j] = 1.0
            else:
                values[i, j] = min(1.0, max(0.0, float(np.dot(r_unit[i], s_unit[j]))))
    return SimilarityMatrix(
        values=values,
        row_labels=tuple(reviews.rendered_texts()),
        col_labels=tuple(summary.rendered_texts()),
    )


def _sorted_mean(values: np.ndarray) -> float:
    # Summing in sorted order makes the result independent of input order.
    return float(np.sort(values).sum() / values.size)


def coverage(matrix: SimilarityMatrix) -> float:
    """Mean over review tuples of their best summary-tuple similarity."""
    if matrix.n_rows < 1 or matrix.n_cols < 1:
        raise InvalidInputError("coverage is undefined for an empty matrix")
    return _sorted_mean(matrix.values.max(axis=1))


def consistency(matrix: SimilarityMatrix) -> float:
    """Mean over summary tuples of their best review-tuple similarity."""
    if matrix.n_rows < 1 or matrix.n_cols < 1:
        raise InvalidInputError("consistency is undefined for an empty matrix")
    return _sorted_mean(matrix.values.max(axis=0))


def factsim(coverage_score: float, consistency_score: float) -> float:
    """Harmonic mean of coverage and consistency; 0 when both are 0."""
    for name, value in (("coverage", coverage_score), ("consistency", consistency_score)):
        if not 0.0 <= value <= 1.0:
            raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")
    total = coverage_score + consistency_score
    if total == 0.0:
        return 0.0
    return 2.0 * coverage_score * consistency_score / total


@dataclass(frozen=True, eq=False)
class ScoreReport:
    """Scores plus the evidence needed to explain them."""

    coverage: float
    consistency: float
    factsim: float
    matrix: SimilarityMatrix
    best_match_per_review_tuple: tuple[tuple[int, float], ...]
    best_match_per_summary_tuple: tuple[tuple[int, float], ...]
    review_facts: FactSet
    summary_facts: FactSet
    encoder_id: str

    def to_json_dict(self, include_matrix: bool = True) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "tool_version": __version__,
            "encoder_id": self.encoder_id,
            "coverage": self.coverage,
            "consistency": self.consistency,
            "factsim": self.factsim,
            "row_labels": list(self.matrix.row_labels),
            "col_labels": list(self.matrix.col_labels),
            "best_match_per_review_tuple": [[j, v] for j, v in self.best_match_per_review_tuple],
            "best_match_per_summary_tuple": [[i, v] for i, v in self.best_match_per_summary_tuple],
            "review_tuples": self.review_facts.to_json_dict()["tuples"],
            "summary_tuples": self.summary_facts.to_json_dict()["tuples"],
        }
        if include_matrix:
            payload["matrix"] = self.matrix.values.tolist()
        return payload

    def to_json(self, include_matrix: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_matrix=include_matrix), indent=2)


def matrix_to_csv(matrix: SimilarityMatrix) -> str:
    """CSV rendering of the matrix; first row is the column labels."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([""] + list(matrix.col_labels))
    for label, row in zip(matrix.row_labels, matrix.values):
        writer.writerow([label] + [repr(float(v)) for v in row])
    return buffer.getvalue()


def score_embedded(reviews: EmbeddedFactSet, summary: EmbeddedFactSet) -> ScoreReport:
    """Score already-embedded fact sets."""
    if len(reviews) == 0 or len(summary) == 0:
        raise EmptyExtractionError("cannot score an empty fact set")
    matrix = similarity_matrix(reviews, summary)
    coverage_score = coverage(matrix)
    consistency_score = consistency(matrix)
    row_best = tuple(
        (int(np.argmax(row)), float(row.max())) for row in matrix.values
    )
    col_best = tuple(
        (int(np.argmax(col)), float(col.max())) for col in matrix.values.T
    )
    return ScoreReport(
        coverage=coverage_score,
        consistency=consistency_score,
        factsim=factsim(coverage_score, consistency_score),
        matrix=matrix,
        best_match_per_review_tuple=row_best,
        best_match_per_summary_tuple=col_best,
        review_facts=reviews.facts,
        summary_facts=summary.facts,
        encoder_id=reviews.encoder_id,
    )


def score(reviews: FactSet, summary: FactSet, encoder: EncoderProvider) -> ScoreReport:
    """End-to-end scoring: embed both fact sets, then compare."""
    if len(reviews) == 0 or len(summary) == 0:
        raise EmptyExtractionError("cannot score an empty fact set")
    return score_embedded(embed(reviews, encoder), embed(summary, encoder))

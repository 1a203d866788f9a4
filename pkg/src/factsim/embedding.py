"""Tuple rendering, encoders, and the clamped cosine similarity.

A fact tuple is rendered as one short text ("subject description") and
embedded once. Any encoder works as long as it is deterministic and never
returns a zero vector: the bundled trigram encoder needs no network or
model files, a remote HTTP encoder and a local sentence-transformers
encoder are available for real semantic similarity.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, ProviderError
from .facts import FactSet, FactTuple
from .providers import EncoderProvider

TEST_ENCODER_DIM = 512
DEFAULT_ST_MODEL = "distiluse-base-multilingual-cased"


def render_tuple_text(fact: FactTuple) -> str:
    """Render a tuple as the single text fed to the encoder."""
    return f"{fact.subject} {fact.description}"


def _bucket(trigram: str, dim: int) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class TrigramEncoder:
    """Offline deterministic encoder: hashed character-trigram bag.

    Platform-stable (hashing via blake2b, not the process-seeded builtin
    hash) and fast, but with no synonym knowledge whatsoever: similarity 1
    happens only for identical texts. Meant for tests and offline runs.
    """

    def __init__(self, dim: int = TEST_ENCODER_DIM):
        if dim <= 0:
            raise InvalidInputError(f"encoder dimension must be positive, got {dim}")
        self.dim = dim
        self.encoder_id = f"test:trigram-{dim}"

    def encode_one(self, text: str) -> np.ndarray:
        # Pad with boundary spaces so even one-character texts produce a
        # trigram and the vector is never all-zero.
        padded = f" {text} "
        if len(padded) < 3:
            padded = padded.ljust(3)
        counts = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(padded) - 2):
            counts[_bucket(padded[i : i + 3], self.dim)] += 1.0
        return counts / np.linalg.norm(counts)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self.encode_one(text) for text in texts])


_DEFAULT_TEST_ENCODER = TrigramEncoder()


def test_encoder(text: str) -> np.ndarray:
    """Encode one text with the shared default trigram encoder."""
    return _DEFAULT_TEST_ENCODER.encode_one(text)


class SentenceTransformerEncoder:
    """Local sentence-transformers encoder (optional dependency)."""

    def __init__(self, model_name: str = DEFAULT_ST_MODEL):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ProviderError(
                "sentence-transformers is not installed; install the 'st' extra"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise ProviderError(f"could not load encoder model {model_name!r}: {exc}") from exc
        self.encoder_id = f"st:{model_name}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, 0), dtype=np.float64)
        vectors = self._model.encode(list(texts), convert_to_numpy=True)
        return np.asarray(vectors, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class EmbeddedFactSet:
    """A fact set paired with one vector per tuple."""

    facts: FactSet
    vectors: np.ndarray  # shape (n_tuples, dim), float64, no zero rows
    encoder_id: str

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise InvalidInputError(f"vectors must be 2-dimensional, got shape {vectors.shape}")
        if vectors.shape[0] != len(self.facts):
            raise InvalidInputError(
                f"{len(self.facts)} tuples but {vectors.shape[0]} vectors"
            )
        if vectors.shape[0] > 0:
            if vectors.shape[1] <= 0:
                raise InvalidInputError("vector dimension must be positive")
            norms = np.linalg.norm(vectors, axis=1)
            zero_rows = np.flatnonzero(norms == 0.0)
            if zero_rows.size:
                raise InvalidInputError(
                    f"encoder returned a zero vector for tuple {int(zero_rows[0])}"
                )
        vectors = vectors.copy()
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    def __len__(self) -> int:
        return len(self.facts)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def rendered_texts(self) -> list[str]:
        return [render_tuple_text(fact) for fact in self.facts]


def embed(facts: FactSet, encoder: EncoderProvider) -> EmbeddedFactSet:
    """Encode every tuple of a fact set, preserving order."""
    texts = [render_tuple_text(fact) for fact in facts]
    raw = encoder.encode(texts)
    vectors = np.asarray(raw, dtype=np.float64)
    if len(texts) == 0:
        vectors = vectors.reshape(0, vectors.shape[1] if vectors.ndim == 2 else 0)
    return EmbeddedFactSet(facts=facts, vectors=vectors, encoder_id=encoder.encoder_id)


def clamped_cosine(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """Cosine similarity with negatives clamped to zero; range [0, 1].

    Byte-identical inputs short-circuit to exactly 1.0 so that duplicate
    tuples always count as perfect matches regardless of rounding.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1:
        raise InvalidInputError("clamped_cosine expects 1-dimensional vectors")
    if va.shape != vb.shape:
        raise InvalidInputError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise InvalidInputError("cosine similarity is undefined for zero vectors")
    if np.array_equal(va, vb):
        return 1.0
    sim = float(np.dot(va, vb)) / (norm_a * norm_b)
    return min(1.0, max(0.0, sim))

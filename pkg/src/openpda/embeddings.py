"""Word-embedding store and loader.

The store is an immutable word -> vector map loaded from the word2vec
text format: a "COUNT DIMENSION" header line followed by one
"word v1 v2 ... vD" line per word. Lookups are case-folded.
"""
from __future__ import annotations

import os
from importlib import resources

import numpy as np

from .errors import DimensionMismatch, EmptyVocabulary, MalformedHeader


class EmbeddingStore:
    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        if dimension <= 0:
            raise MalformedHeader(f"dimension must be positive, got {dimension}")
        if not vectors:
            raise EmptyVocabulary("embedding store needs at least one word")
        for word, vec in vectors.items():
            if vec.shape != (dimension,):
                raise DimensionMismatch(
                    f"vector for {word!r} has length {vec.shape[0]}, expected {dimension}"
                )
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def vector(self, word: str) -> np.ndarray:
        return self._vectors[word.casefold()]

    def matrix(self, words: list[str]) -> np.ndarray:
        """Stack vectors for the given words into a (len(words), dim) array."""
        return np.stack([self.vector(w) for w in words])


def load_embeddings(path: str | os.PathLike) -> EmbeddingStore:
    """Parse a word2vec text file. Duplicate words: the last occurrence wins."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise MalformedHeader(f"expected 'COUNT DIMENSION' header, got {header!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedHeader(f"non-integer header fields in {header!r}") from None
        if count <= 0 or dim <= 0:
            raise MalformedHeader(f"header values must be positive, got {header!r}")

        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            word = fields[0].casefold()
            values = fields[1:]
            if len(values) != dim:
                raise DimensionMismatch(
                    f"line {lineno}: {word!r} has {len(values)} components, expected {dim}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise DimensionMismatch(
                    f"line {lineno}: non-numeric vector component for {word!r}"
                ) from None
            vectors[word] = vec

    if not vectors:
        raise EmptyVocabulary(f"{path} declares a vocabulary but contains no vectors")
    return EmbeddingStore(dimension=dim, vectors=vectors)


def toy_store() -> EmbeddingStore:
    """The hand-placed fixture shipped with the package."""
    with resources.as_file(
        resources.files("openpda").joinpath("data/embeddings_toy.vec")
    ) as p:
        return load_embeddings(p)

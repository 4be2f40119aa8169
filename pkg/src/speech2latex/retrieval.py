"""Embedding providers and exhaustive k-NN search over the equation corpus.

Retrieval supplies the demonstrative examples for in-context prompts: the
natural-language side of every corpus pair is embedded once into an Index,
and queries rank all entries under cosine similarity, Euclidean distance, or
Manhattan distance.  The corpus is small (hundreds of pairs), so search is
an exact linear scan; ties break by index-entry position so results are
reproducible across runs and implementations.

Two providers ship.  ``HashedTrigramProvider`` is fully offline and
deterministic: the text is padded with ``##`` on both sides, character
trigrams are hashed with 64-bit FNV-1a into 512 term-frequency buckets, and
the vector is L2-normalized.  ``RemoteEmbeddingProvider`` calls an external
HTTP embedding API for real semantic vectors.
"""

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels

logger = logging.getLogger(__name__)

MEASURES = ("cosine", "euclidean", "manhattan")

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class RetrievalError(ValueError):
    pass


class EmbeddingTransportError(RuntimeError):
    """Raised when a remote embedding provider cannot be reached."""

    def __init__(self, message: str, provider_id: str):
        super().__init__(message)
        self.provider_id = provider_id


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise RetrievalError(f"expected a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RetrievalError("vector contains non-finite values")
    return arr


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape[0] != v.shape[0]:
        raise RetrievalError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def cosine(u, v) -> float:
    """dot(u, v) / (|u| |v|); rejects zero vectors."""
    u, v = _as_vector(u), _as_vector(v)
    _check_dims(u, v)
    nu = float(np.sqrt(u @ u))
    nv = float(np.sqrt(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise RetrievalError("cosine is undefined for a zero-norm vector")
    return float(u @ v) / (nu * nv)


def euclidean(u, v) -> float:
    u, v = _as_vector(u), _as_vector(v)
    _check_dims(u, v)
    diff = u - v
    return float(np.sqrt(diff @ diff))


def manhattan(u, v) -> float:
    u, v = _as_vector(u), _as_vector(v)
    _check_dims(u, v)
    return float(np.abs(u - v).sum())


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a over bytes."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


class HashedTrigramProvider:
    """Offline deterministic embeddings from hashed character trigrams.

    The text is padded to ``"##" + text + "##"``, every character trigram is
    hashed with FNV-1a (64-bit, over UTF-8 bytes) and reduced mod ``dim``
    into a term-frequency vector, which is then L2-normalized.
    """

    PAD = "##"

    def __init__(self, dim: int = 512):
        self.dim = dim
        self.provider_id = f"hashed-trigram-fnv1a64-d{dim}-v1"

    def buckets(self, text: str) -> dict:
        padded = self.PAD + text + self.PAD
        counts = {}
        for i in range(len(padded) - 2):
            bucket = fnv1a_64(padded[i : i + 3].encode("utf-8")) % self.dim
            counts[bucket] = counts.get(bucket, 0) + 1
        return counts

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise RetrievalError("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for bucket, count in self.buckets(text).items():
            vec[bucket] = count
        return vec / np.sqrt(vec @ vec)


class RemoteEmbeddingProvider:
    """Client for an HTTP embedding API speaking the common JSON protocol.

    POSTs ``{"model": ..., "input": [text]}`` to ``<base_url>/embeddings``
    and reads ``data[0].embedding`` from the response.
    """

    def __init__(self, base_url: str, model: str, dim: int, api_key: str = "", timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.dim = dim
        self.api_key = api_key
        self.timeout = timeout
        self.provider_id = f"remote-{model}-d{dim}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise RetrievalError("cannot embed empty text")
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": [text]},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except Exception as exc:
            raise EmbeddingTransportError(
                f"embedding request failed: {exc}", self.provider_id
            ) from exc
        vec = _as_vector(resp.json()["data"][0]["embedding"])
        if vec.shape[0] != self.dim:
            raise RetrievalError(
                f"provider returned dim {vec.shape[0]}, expected {self.dim}"
            )
        return vec


def get_provider(name: str, **kwargs):
    """Provider registry for CLI/service configuration."""
    if name in ("offline", "hashed-trigram"):
        return HashedTrigramProvider(dim=kwargs.get("dim", 512))
    if name == "remote":
        return RemoteEmbeddingProvider(**kwargs)
    raise RetrievalError(f"unknown embedding provider {name!r}")


@dataclass(frozen=True)
class RetrievalResult:
    pair_id: str
    score: float
    rank: int


class Index:
    """Immutable embedding index: ids aligned with rows of a dense matrix."""

    def __init__(self, ids: Sequence[str], matrix: np.ndarray, provider_id: str, provider=None):
        ids = list(ids)
        if len(set(ids)) != len(ids):
            raise RetrievalError("index entry ids must be unique")
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise RetrievalError("matrix shape does not match id count")
        if not np.all(np.isfinite(matrix)):
            raise RetrievalError("index vectors contain non-finite values")
        self.ids = ids
        self.matrix = matrix
        self.provider_id = provider_id
        self.provider = provider

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def save(self, path) -> None:
        payload = {
            "provider_id": self.provider_id,
            "dim": self.dim,
            "entries": [
                {"id": pair_id, "values": row.tolist()}
                for pair_id, row in zip(self.ids, self.matrix)
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path, provider=None) -> "Index":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        ids = [entry["id"] for entry in payload["entries"]]
        matrix = np.array(
            [entry["values"] for entry in payload["entries"]], dtype=np.float64
        ).reshape(len(ids), payload["dim"])
        index = cls(ids, matrix, payload["provider_id"], provider=provider)
        if provider is not None and getattr(provider, "dim", payload["dim"]) != payload["dim"]:
            raise RetrievalError(
                f"index dim {payload['dim']} does not match provider dim {provider.dim}"
            )
        return index


def build_index(pairs: Iterable, provider) -> Index:
    """Embed the natural-language side of every pair, preserving order."""
    pairs = list(pairs)
    if not pairs:
        raise RetrievalError("cannot build an index from zero pairs")
    ids = []
    rows = []
    for pair in pairs:
        if pair.id in set(ids):
            raise RetrievalError(f"duplicate pair id {pair.id!r}")
        try:
            rows.append(provider.embed(pair.nl_text))
        except Exception as exc:
            raise RetrievalError(f"embedding failed for pair {pair.id!r}: {exc}") from exc
        ids.append(pair.id)
    return Index(ids, np.vstack(rows), provider.provider_id, provider=provider)


def query_vector(
    index: Index,
    vector,
    k: int,
    measure: str = "cosine",
    exclude_ids: Optional[set] = None,
) -> list:
    """Rank index entries against a raw vector; see ``query``."""
    if k < 1:
        raise RetrievalError(f"k must be >= 1, got {k}")
    if measure not in MEASURES:
        raise RetrievalError(f"measure must be one of {MEASURES}, got {measure!r}")
    if len(index) == 0:
        raise RetrievalError("index is empty")
    vector = _as_vector(vector)
    if vector.shape[0] != index.dim:
        raise RetrievalError(
            f"query dim {vector.shape[0]} does not match index dim {index.dim}"
        )
    if measure == "cosine":
        if float(vector @ vector) == 0.0:
            raise RetrievalError("cosine is undefined for a zero-norm query")
        scores = _kernels.cosine_scores(index.matrix, vector)
        order = np.argsort(-scores, kind="stable")
    elif measure == "euclidean":
        scores = _kernels.euclidean_scores(index.matrix, vector)
        order = np.argsort(scores, kind="stable")
    else:
        scores = _kernels.manhattan_scores(index.matrix, vector)
        order = np.argsort(scores, kind="stable")
    excluded = exclude_ids or set()
    results = []
    for pos in order:
        pair_id = index.ids[pos]
        if pair_id in excluded:
            continue
        results.append(
            RetrievalResult(pair_id=pair_id, score=float(scores[pos]), rank=len(results) + 1)
        )
        if len(results) == k:
            break
    if len(results) < k:
        logger.warning(
            "query asked for k=%d but only %d entries available; truncating",
            k,
            len(results),
        )
    return results


def query(
    index: Index,
    text: str,
    k: int,
    measure: str = "cosine",
    exclude_ids: Optional[set] = None,
) -> list:
    """Top-k entries for a text query under the given measure.

    Results carry 1-based ranks; ties break by ascending entry position.
    When k exceeds the (non-excluded) index size, all entries are returned
    and the truncation is logged.
    """
    if index.provider is None:
        raise RetrievalError("index has no embedding provider attached")
    return query_vector(index, index.provider.embed(text), k, measure, exclude_ids)

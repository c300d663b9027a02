"""Text/keyframe embedding and the on-disk embedding store.

Two backends provide the shared text/image vector space:

* ``mock`` — deterministic signed feature hashing, so the whole pipeline
  runs offline and reproducibly. Tokens are the lowercase alphanumeric
  runs of the input; each token t maps to bucket ``h(t) % d`` with sign
  ``+1`` if bit 63 of ``h(t)`` is 0 else ``-1``, where ``h(t)`` is the
  little-endian uint64 of ``blake2b(t.encode("utf-8"), digest_size=8)``.
  Contributions accumulate and the result is L2-normalized; an input with
  no tokens maps to the first basis vector. Shared tokens therefore raise
  the dot product, which is the only property retrieval logic relies on.
* ``http`` — any embedding service speaking the JSON protocol below, so a
  real CLIP server can be dropped in:
    POST {url}/embed/text   {"texts": [...]}        -> {"vectors": [[...], ...]}
    POST {url}/embed/image  {"image_path": "..."}   -> {"vector": [...]}

Store file layout (little-endian): magic ``RPD1``, u32 version=1, u32
dimension, u64 count, then count x dimension float32 rows in row-major
order, row r holding the unit vector of keyframe_id r.
"""
from __future__ import annotations

import json
import re
import struct
from hashlib import blake2b
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, IngestionError, TransportError, ValidationError
from .keyframes import KeyframeRecord

STORE_MAGIC = b"RPD1"
STORE_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")  # magic, version, dimension, count

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; underscores and punctuation split."""
    return _TOKEN_RE.findall(text.lower())


def _token_hash(token: str) -> int:
    return int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def mock_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic unit vector for *text* via signed feature hashing."""
    if dim < 8:
        raise ValidationError(f"mock embedding dimension must be >= 8, got {dim}")
    acc = np.zeros(dim, dtype=np.float32)
    for token in tokenize(text):
        h = _token_hash(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        acc[h % dim] += sign
    if not acc.any():
        acc[0] = 1.0
    return normalize(acc)


def normalize(vec: np.ndarray) -> np.ndarray:
    """L2-normalize to a float32 unit vector."""
    vec = np.asarray(vec, dtype=np.float32)
    if vec.ndim != 1:
        raise ValidationError(f"expected a 1-d vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValidationError("embedding vector contains non-finite values")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValidationError("cannot normalize a zero vector")
    return vec / np.float32(norm)


class EmbeddingBackend(Protocol):
    dimension: int

    def embed_text_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class MockEmbeddingBackend:
    """Offline backend; also embeds keyframes from caption-token sidecars."""

    def __init__(self, dimension: int):
        if dimension < 8:
            raise ConfigurationError(f"embedding.dimension must be >= 8, got {dimension}")
        self.dimension = dimension

    def embed_text_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [mock_embed(t, self.dimension) for t in texts]


class HttpEmbeddingBackend:
    """Client for an external embedding service (see module docstring)."""

    def __init__(self, url: str, dimension: int, client=None, timeout: float = 30.0):
        import httpx

        self.url = url.rstrip("/")
        self.dimension = dimension
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        try:
            resp = self._client.post(self.url + path, json=payload)
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise TransportError(f"embedding service {self.url + path}: {exc}") from exc

    def embed_text_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        data = self._post("/embed/text", {"texts": list(texts)})
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise TransportError(
                f"embedding service returned {len(vectors) if isinstance(vectors, list) else 'no'} "
                f"vectors for {len(texts)} texts"
            )
        return [np.asarray(v, dtype=np.float32) for v in vectors]

    def embed_image(self, image_path: str) -> np.ndarray:
        data = self._post("/embed/image", {"image_path": image_path})
        return np.asarray(data.get("vector"), dtype=np.float32)


def embed_texts(texts: Sequence[str], backend: EmbeddingBackend) -> np.ndarray:
    """Embed a batch of texts into unit rows of an (n, d) float32 matrix.

    Order-preserving; rejects empty batches and blank texts; raises
    ConfigurationError when the backend's vectors do not match its
    configured dimension.
    """
    if not texts:
        raise ValidationError("embed_texts requires a non-empty list of texts")
    for i, text in enumerate(texts):
        if not text or not text.strip():
            raise ValidationError(f"text at position {i} is empty")
    vectors = backend.embed_text_batch(texts)
    out = np.empty((len(texts), backend.dimension), dtype=np.float32)
    for i, vec in enumerate(vectors):
        if vec.shape != (backend.dimension,):
            raise ConfigurationError(
                f"backend returned dimension {vec.shape} for text {i}, "
                f"configured d={backend.dimension}"
            )
        out[i] = normalize(vec)
    return out


class EmbeddingStore:
    """Immutable m x d matrix of unit vectors, row r = keyframe_id r."""

    def __init__(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValidationError(f"store rows must be 2-d, got shape {rows.shape}")
        self.rows = rows
        self.rows.setflags(write=False)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "EmbeddingStore":
        """Normalize raw rows and wrap them; use for freshly computed embeddings."""
        rows = np.asarray(rows, dtype=np.float32)
        if rows.size:
            norms = np.linalg.norm(rows, axis=1, keepdims=True)
            if np.any(norms == 0.0) or not np.all(np.isfinite(rows)):
                raise ValidationError("store rows must be finite and non-zero")
            rows = rows / norms
        return cls(rows)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = _HEADER.pack(STORE_MAGIC, STORE_VERSION, self.dimension, self.count)
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.rows).tobytes())

    @classmethod
    def load(cls, path: str | Path, mmap: bool = False) -> "EmbeddingStore":
        path = Path(path)
        try:
            with path.open("rb") as fh:
                header = fh.read(_HEADER.size)
        except OSError as exc:
            raise IngestionError(f"cannot read embedding store {path}: {exc}") from exc
        if len(header) < _HEADER.size:
            raise IngestionError(f"{path}: truncated store header")
        magic, version, dimension, count = _HEADER.unpack(header)
        if magic != STORE_MAGIC:
            raise IngestionError(f"{path}: bad magic {magic!r}, expected {STORE_MAGIC!r}")
        if version != STORE_VERSION:
            raise IngestionError(f"{path}: unsupported store version {version}")
        expected = _HEADER.size + count * dimension * 4
        actual = path.stat().st_size
        if actual != expected:
            raise IngestionError(f"{path}: size {actual} != expected {expected} bytes")
        if mmap and count:
            rows = np.memmap(path, dtype="<f4", mode="r", offset=_HEADER.size, shape=(count, dimension))
            rows = np.asarray(rows)
        else:
            with path.open("rb") as fh:
                fh.seek(_HEADER.size)
                rows = np.frombuffer(fh.read(), dtype="<f4").reshape(count, dimension)
        return cls(rows.copy() if not mmap else rows)


class CaptionSidecar:
    """Per-keyframe caption tokens for the mock backend.

    JSONL of {keyframe_id, caption_tokens}; caption_tokens is the text the
    mock embedder hashes in place of real image content.
    """

    def __init__(self, captions: dict[int, str]):
        self.captions = captions

    @classmethod
    def load(cls, path: str | Path) -> "CaptionSidecar":
        path = Path(path)
        captions: dict[int, str] = {}
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestionError(f"cannot read caption sidecar {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                captions[int(obj["keyframe_id"])] = str(obj["caption_tokens"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise IngestionError(f"{path}:{lineno}: malformed caption record: {exc}") from exc
        return cls(captions)


def embed_keyframes(
    manifest_records: Sequence[KeyframeRecord],
    backend: EmbeddingBackend,
    captions: Optional[CaptionSidecar] = None,
) -> EmbeddingStore:
    """Embed every manifest keyframe into a store aligned with keyframe_id.

    The mock backend requires a caption sidecar covering all ids; the HTTP
    backend embeds each record's image_path. Missing inputs raise a single
    IngestionError listing the offending ids.
    """
    m = len(manifest_records)
    if m == 0:
        dim = backend.dimension
        return EmbeddingStore(np.empty((0, dim), dtype=np.float32))
    if sorted(r.keyframe_id for r in manifest_records) != list(range(m)):
        raise ValidationError("manifest keyframe ids must be dense 0..m-1")

    rows = np.empty((m, backend.dimension), dtype=np.float32)
    if isinstance(backend, MockEmbeddingBackend):
        if captions is None:
            raise ConfigurationError("mock backend needs a caption sidecar to embed keyframes")
        missing = [r.keyframe_id for r in manifest_records if r.keyframe_id not in captions.captions]
        if missing:
            raise IngestionError(
                f"caption sidecar is missing {len(missing)} keyframe ids: "
                f"{missing[:20]}{'...' if len(missing) > 20 else ''}"
            )
        for record in manifest_records:
            rows[record.keyframe_id] = mock_embed(captions.captions[record.keyframe_id], backend.dimension)
    else:
        for record in manifest_records:
            vec = backend.embed_image(record.image_path)
            if vec.shape != (backend.dimension,):
                raise ConfigurationError(
                    f"embedding service returned shape {vec.shape} for keyframe "
                    f"{record.keyframe_id}, configured d={backend.dimension}"
                )
            rows[record.keyframe_id] = normalize(vec)
    return EmbeddingStore(rows)

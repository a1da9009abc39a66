"""
app/services/embedding_service.py

Embedding providers for short-term memory recall.

- LocalEmbedder: deterministic feature hashing (lowercase, split on
  non-alphanumerics, signed MurmurHash3 into D buckets, L2-normalize). Used by
  tests and offline runs.
- RemoteEmbeddingClient: JSON-over-HTTP client for an external embedding
  service. Vectors are re-normalized on receipt.

Remote wire contract
--------------------
Request:  POST <endpoint>, Content-Type: application/json
          {"model": "<model name>", "input": "<text>"}
          Authorization: Bearer <EMBED_API_KEY> when a key is configured.
Response: 2xx with a JSON object carrying the vector either as
          {"embedding": [float, ...]} or {"data": [{"embedding": [float, ...]}]}.
The vector length must equal the configured dimension.
"""

import math
import re
from functools import lru_cache
from typing import Any, Dict, List, Optional, Protocol

import mmh3
import numpy as np
import requests

from app.config import Settings, get_settings
from app.utils.exceptions import (
    ConfigurationError,
    EmbeddingDimensionError,
    EmbeddingError,
    EmbeddingResponseError,
    EmbeddingTimeoutError,
)
from app.utils.logger import get_logger

logger = get_logger(__name__)

LOCAL_MODEL_NAME = "local-feature-hash"

_TOKEN_PATTERN = re.compile(r"[a-z0-9]+")


class Embedder(Protocol):
    model_name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray:
        ...


def tokenize(text: str) -> List[str]:
    return _TOKEN_PATTERN.findall(text.lower())


def normalize(values: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; rejects zero or non-finite vectors"""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("embedding contains non-finite values")
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return values / norm


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - dot(a, b) for unit vectors, clamped to [0, 2]"""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return min(2.0, max(0.0, 1.0 - float(np.dot(a, b))))


class LocalEmbedder:
    """Signed feature hashing of lowercase alphanumeric tokens"""

    def __init__(self, dimension: int = 256, seed: int = 0x5EED):
        if dimension < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {dimension}", key="dimension")
        self.dimension = dimension
        self.seed = seed
        self.model_name = LOCAL_MODEL_NAME
        self._embed_cached = lru_cache(maxsize=65536)(self._embed)

    def _embed(self, text: str) -> np.ndarray:
        accumulator = np.zeros(self.dimension, dtype=np.float64)
        tokens = tokenize(text)
        if not tokens:
            accumulator[0] = 1.0
        else:
            for token in tokens:
                h = mmh3.hash(token, self.seed, signed=False)
                sign = -1.0 if (h >> 31) & 1 else 1.0
                accumulator[h % self.dimension] += sign
            norm = float(np.linalg.norm(accumulator))
            if norm == 0.0:
                # every token cancelled out
                accumulator[:] = 0.0
                accumulator[0] = 1.0
            else:
                accumulator /= norm
        accumulator.flags.writeable = False
        return accumulator

    def embed(self, text: str) -> np.ndarray:
        return self._embed_cached(text)


@lru_cache()
def default_local_embedder() -> LocalEmbedder:
    settings = get_settings()
    return LocalEmbedder(dimension=settings.LOCAL_EMBED_DIMENSION, seed=settings.LOCAL_EMBED_SEED)


def embed_local(text: str) -> np.ndarray:
    return default_local_embedder().embed(text)


class RemoteEmbeddingClient:
    """Client for an external embedding service (see module docstring for the contract)"""

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        dimension: int,
        timeout_ms: int = 10000,
        max_retries: int = 0,
        api_key: Optional[str] = None,
        session: Optional[requests.Session] = None
    ):
        if not endpoint:
            raise ConfigurationError("EMBED_ENDPOINT is not configured", key="EMBED_ENDPOINT")
        if timeout_ms <= 0:
            raise ConfigurationError(f"timeout must be positive, got {timeout_ms}", key="EMBED_TIMEOUT_MS")
        self.endpoint = endpoint
        self.model_name = model_name
        self.dimension = dimension
        self.timeout = timeout_ms / 1000.0
        self.max_retries = max_retries
        self.api_key = api_key
        self.session = session or requests.Session()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json", "Accept": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def embed(self, text: str) -> np.ndarray:
        payload = {"model": self.model_name, "input": text}
        attempts = 1 + self.max_retries

        for attempt in range(1, attempts + 1):
            try:
                logger.debug(f"Embedding request to {self.endpoint} (attempt {attempt}/{attempts})")
                response = self.session.post(
                    self.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout
                )
            except requests.exceptions.Timeout as e:
                logger.error(f"Embedding request timeout after {self.timeout:.3f}s")
                if attempt == attempts:
                    raise EmbeddingTimeoutError(f"Embedding request timed out after {self.timeout:.3f}s") from e
                continue
            except requests.exceptions.RequestException as e:
                logger.error(f"Embedding request failed: {str(e)}")
                if attempt == attempts:
                    raise EmbeddingError(f"Embedding request failed: {str(e)}") from e
                continue

            return self._parse_response(response)

        raise EmbeddingError("Embedding request failed")  # pragma: no cover

    def _parse_response(self, response: requests.Response) -> np.ndarray:
        if not 200 <= response.status_code < 300:
            raise EmbeddingResponseError(
                f"Embedding service returned {response.status_code}: {response.text[:200]}",
                status_code=response.status_code
            )
        try:
            body = response.json()
        except ValueError as e:
            raise EmbeddingResponseError(f"Embedding response is not JSON: {str(e)}") from e

        values = _extract_vector(body)
        if len(values) != self.dimension:
            raise EmbeddingDimensionError(expected=self.dimension, received=len(values))
        try:
            return normalize(np.asarray(values, dtype=np.float64))
        except ValueError as e:
            raise EmbeddingResponseError(f"Unusable embedding vector: {str(e)}") from e


def _extract_vector(body: Any) -> List[float]:
    if not isinstance(body, dict):
        raise EmbeddingResponseError(f"Embedding response must be an object, got {type(body).__name__}")

    candidate = body.get("embedding")
    if candidate is None:
        data = body.get("data")
        if isinstance(data, list) and data and isinstance(data[0], dict):
            candidate = data[0].get("embedding")

    if not isinstance(candidate, list) or not candidate:
        raise EmbeddingResponseError("Embedding response carries no float array")
    for item in candidate:
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise EmbeddingResponseError(f"Embedding array holds a non-numeric value: {item!r}")
    return [float(v) for v in candidate]


def embed_remote(endpoint: str, model_name: str, text: str, dimension: Optional[int] = None,
                 timeout_ms: Optional[int] = None, max_retries: Optional[int] = None) -> np.ndarray:
    settings = get_settings()
    client = RemoteEmbeddingClient(
        endpoint=endpoint,
        model_name=model_name,
        dimension=dimension or settings.EMBED_DIMENSION,
        timeout_ms=timeout_ms or settings.EMBED_TIMEOUT_MS,
        max_retries=settings.EMBED_MAX_RETRIES if max_retries is None else max_retries,
        api_key=settings.EMBED_API_KEY or None
    )
    return client.embed(text)


def build_embedder(settings: Optional[Settings] = None, backend: str = "local") -> Embedder:
    """Pick the embedding provider: 'local' (default) or 'remote' (needs EMBED_ENDPOINT)"""
    settings = settings or get_settings()
    if backend == "remote":
        logger.info(f"Using remote embedder {settings.EMBED_MODEL} at {settings.EMBED_ENDPOINT}")
        return RemoteEmbeddingClient(
            endpoint=settings.EMBED_ENDPOINT,
            model_name=settings.EMBED_MODEL,
            dimension=settings.EMBED_DIMENSION,
            timeout_ms=settings.EMBED_TIMEOUT_MS,
            max_retries=settings.EMBED_MAX_RETRIES,
            api_key=settings.EMBED_API_KEY or None
        )
    if backend != "local":
        raise ConfigurationError(f"unknown embedding backend {backend!r}", key="embedding")
    return LocalEmbedder(dimension=settings.LOCAL_EMBED_DIMENSION, seed=settings.LOCAL_EMBED_SEED)

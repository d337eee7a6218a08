"""Token segmentation and the shared sentence-encoder contract.

Two encoders satisfy the same contract (per-token vectors plus one sentence
vector of dimension d): a deterministic trainable baseline built on hashed
character n-gram embeddings, and a thin HTTP client for plugging in an
external pretrained encoder.  The baseline keeps everything downstream
(sequence tagging, relation classification, uncertainty scoring) testable
without any pretrained weights.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

# Word runs keep +, . and & attached when they follow a word character
# ("Google+", "Inc.", "U.S."); every other punctuation mark is its own token.
_TOKEN_RE = re.compile(r"\w+(?:[+.&]\w+)*[+.&]?|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Unicode word-boundary segmentation with intra-word +/./& kept attached."""
    if not text:
        return []
    return _TOKEN_RE.findall(text)


class EncodingError(Exception):
    pass


class EncoderUnavailableError(EncodingError):
    """Remote encoder could not be reached within the configured timeout."""


class EncoderResponseError(EncodingError):
    """Remote encoder answered with a malformed payload."""


class DimensionMismatchError(EncoderResponseError):
    """Remote encoder's dimension differs from the configured d."""


@dataclass(frozen=True)
class EncoderConfig:
    d: int = 64
    hash_buckets: int = 4096
    # 0 = pure self-features; widening mixes neighbor means into each token,
    # which blurs adjacent positions together and is off by default
    context_window: int = 0
    seed: int = 0
    ngram_orders: tuple[int, ...] = (2, 3)
    # std of each bucket row; mean-pooling over grams and windows shrinks
    # token coordinates well below this, so it is deliberately generous to
    # keep linear-head margins viable at small learning rates
    init_std: float = 2.0

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("embedding dimension must be >= 2")
        if self.hash_buckets < 1:
            raise ValueError("hash_buckets must be >= 1")
        if self.context_window < 0:
            raise ValueError("context_window must be >= 0")
        if self.init_std <= 0:
            raise ValueError("init_std must be > 0")


@dataclass
class EncoderOutput:
    token_vectors: np.ndarray  # (n, d)
    sentence_vector: np.ndarray  # (d,)


def fnv1a_32(data: bytes) -> int:
    """32-bit FNV-1a; fixed constants make bucketing stable across platforms."""
    h = 0x811C9DC5
    for byte in data:
        h ^= byte
        h = (h * 0x01000193) & 0xFFFFFFFF
    return h


@dataclass
class EncodeCache:
    """Bookkeeping needed to push gradients back into the embedding table."""

    buckets: list[list[int]] = field(default_factory=list)
    windows: list[range] = field(default_factory=list)


class HashedNgramEncoder:
    """Deterministic baseline encoder over hashed character n-grams.

    Each token embeds as the mean of its n-gram bucket rows, token vectors
    mix with their context_window neighbors, and the sentence vector is the
    mean of the token vectors.  Everything is linear in the embedding table,
    so gradients are exact and cheap.
    """

    def __init__(self, config: EncoderConfig):
        self.config = config
        self._bucket_cache: dict[str, list[int]] = {}

    def init_params(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if rng is None:
            rng = np.random.default_rng(self.config.seed)
        scale = self.config.init_std
        return rng.normal(0.0, scale, size=(self.config.hash_buckets, self.config.d))

    def token_buckets(self, token: str) -> list[int]:
        cached = self._bucket_cache.get(token)
        if cached is not None:
            return cached
        grams: list[str] = []
        for order in self.config.ngram_orders:
            grams.extend(token[i : i + order] for i in range(len(token) - order + 1))
        if not grams:
            grams = [token]
        buckets = [
            fnv1a_32(f"{self.config.seed}\x1f{g}".encode("utf-8")) % self.config.hash_buckets
            for g in grams
        ]
        self._bucket_cache[token] = buckets
        return buckets

    def encode_with_cache(
        self, tokens: Sequence[str], params: np.ndarray
    ) -> tuple[EncoderOutput, EncodeCache]:
        d = self.config.d
        n = len(tokens)
        cache = EncodeCache()
        if n == 0:
            return (
                EncoderOutput(np.zeros((0, d)), np.zeros(d)),
                cache,
            )
        raw = np.empty((n, d))
        for i, token in enumerate(tokens):
            buckets = self.token_buckets(token)
            cache.buckets.append(buckets)
            raw[i] = params[buckets].mean(axis=0)
        w = self.config.context_window
        vectors = np.empty((n, d))
        for i in range(n):
            window = range(max(0, i - w), min(n, i + w + 1))
            cache.windows.append(window)
            vectors[i] = raw[window.start : window.stop].mean(axis=0)
        return EncoderOutput(vectors, vectors.mean(axis=0)), cache

    def encode(self, tokens: Sequence[str], params: np.ndarray) -> EncoderOutput:
        """Pure function of (tokens, params, config); see class docstring."""
        if params.shape != (self.config.hash_buckets, self.config.d):
            raise EncodingError(
                f"params shape {params.shape} != "
                f"({self.config.hash_buckets}, {self.config.d})"
            )
        if not np.isfinite(params).all():
            raise EncodingError("non-finite encoder parameter detected")
        output, _ = self.encode_with_cache(tokens, params)
        return output

    def backward(
        self,
        cache: EncodeCache,
        d_token_vectors: Optional[np.ndarray],
        d_sentence_vector: Optional[np.ndarray],
        grad_params: np.ndarray,
    ) -> None:
        """Accumulate dLoss/dE into grad_params given upstream gradients."""
        n = len(cache.buckets)
        if n == 0:
            return
        d = grad_params.shape[1]
        dv = np.zeros((n, d))
        if d_token_vectors is not None:
            dv += d_token_vectors
        if d_sentence_vector is not None:
            dv += d_sentence_vector[None, :] / n
        draw = np.zeros((n, d))
        for i, window in enumerate(cache.windows):
            share = dv[i] / len(window)
            for j in window:
                draw[j] += share
        for i, buckets in enumerate(cache.buckets):
            share = draw[i] / len(buckets)
            for b in buckets:
                grad_params[b] += share


class EncoderClient(Protocol):
    """Contract a remote encoder transport must satisfy."""

    def info(self) -> dict: ...

    def encode_request(self, tokens: Sequence[str]) -> dict: ...


class HttpEncoderClient:
    """HTTP transport for an external encoder service.

    ``GET {base}/info`` advertises the dimension; ``POST {base}/encode``
    accepts ``{"tokens": [...]}`` and returns token vectors plus a sentence
    vector.
    """

    def __init__(self, base_url: str, timeout: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def info(self) -> dict:
        import httpx

        try:
            resp = httpx.get(f"{self.base_url}/info", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise EncoderUnavailableError(f"encoder /info failed: {exc}") from exc

    def encode_request(self, tokens: Sequence[str]) -> dict:
        import httpx

        try:
            resp = httpx.post(
                f"{self.base_url}/encode", json={"tokens": list(tokens)}, timeout=self.timeout
            )
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise EncoderUnavailableError(f"encoder request failed: {exc}") from exc


def remote_encode(tokens: Sequence[str], client: EncoderClient, d: int) -> EncoderOutput:
    """Fetch encodings from a remote encoder, validating the output contract.

    Transport failures surface as EncoderUnavailableError; there is no
    silent fallback to the baseline encoder.
    """
    payload = client.encode_request(tokens)
    try:
        token_vectors = np.asarray(payload["token_vectors"], dtype=float)
        sentence_vector = np.asarray(payload["sentence_vector"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise EncoderResponseError(f"malformed encoder response: {exc}") from exc
    if token_vectors.ndim != 2 and not (token_vectors.size == 0 and len(tokens) == 0):
        raise EncoderResponseError("token_vectors must be a matrix")
    if len(tokens) == 0:
        token_vectors = token_vectors.reshape(0, d) if token_vectors.size == 0 else token_vectors
    if token_vectors.shape[0] != len(tokens):
        raise EncoderResponseError(
            f"expected {len(tokens)} token vectors, got {token_vectors.shape[0]}"
        )
    width = token_vectors.shape[1] if token_vectors.size else sentence_vector.shape[0]
    if width != d or sentence_vector.shape != (d,):
        raise DimensionMismatchError(f"remote dimension {width} != configured {d}")
    if not (np.isfinite(token_vectors).all() and np.isfinite(sentence_vector).all()):
        raise EncoderResponseError("non-finite values in encoder response")
    return EncoderOutput(token_vectors, sentence_vector)

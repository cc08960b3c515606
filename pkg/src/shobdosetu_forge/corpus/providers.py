"""Adapters for the external word predictor.

Two jobs are delegated outside the toolkit: naming the last words spoken in
a chunk's audio tail (boundary validation) and replacing Devanagari tokens
with the Bengali words actually uttered. Both are served either from a
remote HTTP endpoint or from JSONL lookup files for offline, reproducible
runs.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import time
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
import requests
from scipy.io import wavfile

from ..audiocore import AudioClip, quantize_pcm16
from ..errors import MalformedDocument, ProviderError

log = logging.getLogger(__name__)

ENV_URL = "SHOBDOSETU_ENDPOINT_URL"
ENV_API_KEY = "SHOBDOSETU_ENDPOINT_API_KEY"


@runtime_checkable
class EndpointProvider(Protocol):
    def predict(self, chunk_id: str, audio_tail: AudioClip | None) -> list[str]:
        """Final spoken words of the tail, oldest first. Empty if nothing is heard."""
        ...


@runtime_checkable
class ReplacementProvider(Protocol):
    def replace(self, chunk_id: str, tokens: Sequence[str], positions: Sequence[int]) -> list[str] | None:
        """One replacement word per position, or None if unavailable."""
        ...


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedDocument(f"{path}:{lineno}: {exc}") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("chunk_id"), str):
                raise MalformedDocument(f"{path}:{lineno}: expected an object with a string chunk_id")
            words = obj.get("words")
            if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
                raise MalformedDocument(f"{path}:{lineno}: 'words' must be a list of strings")
            rows.append(obj)
    return rows


class FileProvider:
    """Lookup-table predictor: JSONL lines of ``{"chunk_id": ..., "words": [...]}``.

    Unknown chunk ids predict nothing, which leaves the chunk unvalidated.
    """

    def __init__(self, table: dict[str, list[str]]):
        self.table = table

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "FileProvider":
        return cls({row["chunk_id"]: list(row["words"]) for row in _read_jsonl(path)})

    def predict(self, chunk_id: str, audio_tail: AudioClip | None) -> list[str]:
        return list(self.table.get(chunk_id, []))


class FileReplacementProvider:
    """Replacement words per chunk, in position order, from the same JSONL shape."""

    def __init__(self, table: dict[str, list[str]]):
        self.table = table

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "FileReplacementProvider":
        return cls({row["chunk_id"]: list(row["words"]) for row in _read_jsonl(path)})

    def replace(self, chunk_id: str, tokens: Sequence[str], positions: Sequence[int]) -> list[str] | None:
        words = self.table.get(chunk_id)
        if words is None or len(words) != len(positions):
            return None
        return list(words)


def encode_wav_base64(clip: AudioClip) -> str:
    buf = io.BytesIO()
    codes, _ = quantize_pcm16(clip.samples)
    wavfile.write(buf, clip.sample_rate_hz, codes)
    return base64.b64encode(buf.getvalue()).decode("ascii")


class RemoteProvider:
    """HTTP client for a remote predictor.

    Every call is a JSON POST to ``url``. Endpoint prediction sends
    ``{"task": "endpoint_words", "chunk_id", "sample_rate_hz",
    "audio_wav_base64"}``; replacement sends ``{"task": "replace_tokens",
    "chunk_id", "tokens", "positions"}``. Both expect ``{"words": [...]}``
    back. Failed calls are retried ``retries`` times with exponential
    backoff before :class:`ProviderError` is raised.
    """

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        timeout_s: float = 30.0,
        retries: int = 3,
        backoff_s: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.url = url
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self.session = session or requests.Session()

    @classmethod
    def from_env(cls, **kw) -> "RemoteProvider":
        url = os.environ.get(ENV_URL)
        if not url:
            raise ProviderError(f"{ENV_URL} is not set")
        return cls(url, os.environ.get(ENV_API_KEY), **kw)

    def _post(self, payload: dict) -> list[str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self.session.post(self.url, json=payload, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                words = resp.json().get("words", [])
                if not isinstance(words, list):
                    raise ValueError("'words' is not a list")
                return [str(w) for w in words]
            except (requests.RequestException, ValueError, AttributeError) as exc:
                last_exc = exc
                log.warning("predictor call %s failed (attempt %d): %s", payload.get("chunk_id"), attempt + 1, exc)
        raise ProviderError(f"predictor failed after {self.retries + 1} attempts: {last_exc}")

    def predict(self, chunk_id: str, audio_tail: AudioClip | None) -> list[str]:
        if audio_tail is None or len(audio_tail) == 0 or not np.any(audio_tail.samples):
            return []
        return self._post(
            {
                "task": "endpoint_words",
                "chunk_id": chunk_id,
                "sample_rate_hz": audio_tail.sample_rate_hz,
                "audio_wav_base64": encode_wav_base64(audio_tail),
            }
        )

    def replace(self, chunk_id: str, tokens: Sequence[str], positions: Sequence[int]) -> list[str] | None:
        words = self._post(
            {"task": "replace_tokens", "chunk_id": chunk_id, "tokens": list(tokens), "positions": list(positions)}
        )
        return words if len(words) == len(positions) else None

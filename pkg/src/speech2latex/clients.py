"""Clients for the two external models (ASR and chat LLM) plus offline stubs.

Remote clients speak plain HTTP: the transcriber posts multipart WAV audio,
the chat client posts chat-completion JSON to a configurable base URL, so the
same code targets any compatible server.  Retry policy: 4xx responses fail
immediately, 5xx and transport errors retry with exponential backoff
(BACKOFF_BASE * 2^attempt seconds, capped at BACKOFF_CAP).  Credentials come
from configuration or environment and are never logged.

The stub clients make the full pipeline runnable and exactly predictable
with no network: a fixture transcriber keyed on audio bytes, an
echo-last-example LLM, a fixed-response LLM, and a nearest-neighbor LLM that
answers with the latex of its own rank-1 retrieval.
"""

import hashlib
import io
import logging
import re
import time
import wave
from dataclasses import dataclass, field
from typing import Optional

from .prompting import AssembledPrompt

logger = logging.getLogger(__name__)

BACKOFF_BASE = 0.5  # seconds
BACKOFF_CAP = 30.0  # ceiling for a single backoff sleep

EXPECTED_WAV = "WAV, PCM 16-bit, mono, 16 kHz"


class AudioFormatError(ValueError):
    pass


class TransportError(RuntimeError):
    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class GenerationError(RuntimeError):
    pass


@dataclass
class GenerationConfig:
    model_name: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_tokens: int = 256
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")


@dataclass(frozen=True)
class TranscriptionResult:
    text: str
    audio_duration: float


def validate_wav(audio: bytes) -> float:
    """Check the service WAV contract and return the duration in seconds."""
    try:
        with wave.open(io.BytesIO(audio)) as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.getnframes()
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"not a readable WAV file ({exc}); expected {EXPECTED_WAV}") from None
    if channels != 1 or width != 2 or rate != 16000:
        raise AudioFormatError(
            f"got {channels} channel(s), {8 * width}-bit, {rate} Hz; expected {EXPECTED_WAV}"
        )
    return frames / rate


def _retry_loop(send, retries: int, what: str):
    """Run ``send`` with the shared retry/backoff policy.

    ``send`` returns a value or raises TransportError; a TransportError with
    a 4xx status aborts immediately, everything else retries.
    """
    attempts = retries + 1
    last_error = None
    for attempt in range(attempts):
        try:
            return send()
        except TransportError as exc:
            if exc.status is not None and 400 <= exc.status < 500:
                raise
            last_error = exc
            if attempt + 1 < attempts:
                delay = min(BACKOFF_BASE * (2**attempt), BACKOFF_CAP)
                logger.debug("%s attempt %d failed (%s); retrying in %.1fs", what, attempt + 1, exc, delay)
                time.sleep(delay)
    raise TransportError(
        f"{what} failed after {attempts} attempts: {last_error}",
        status=getattr(last_error, "status", None),
    )


# --- transcription -----------------------------------------------------------


class HttpTranscriber:
    """Posts multipart WAV to an external ASR service endpoint."""

    def __init__(self, base_url: str, api_key: str = "", timeout: float = 60.0, retries: int = 2):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries

    def transcribe_text(self, audio: bytes) -> str:
        import requests

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        def send():
            try:
                resp = requests.post(
                    f"{self.base_url}/transcribe",
                    files={"file": ("audio.wav", audio, "audio/wav")},
                    headers=headers,
                    timeout=self.timeout,
                )
            except Exception as exc:
                raise TransportError(f"ASR request failed: {exc}") from exc
            if resp.status_code >= 400:
                raise TransportError(
                    f"ASR service returned {resp.status_code}", status=resp.status_code
                )
            return resp.json()["text"]

        return _retry_loop(send, self.retries, "transcription")


class FixtureTranscriber:
    """Deterministic stub keyed on a SHA-256 of the audio bytes."""

    def __init__(self, default_text: Optional[str] = None):
        self._mapping = {}
        self.default_text = default_text

    @staticmethod
    def _key(audio: bytes) -> str:
        return hashlib.sha256(audio).hexdigest()

    def register(self, audio: bytes, text: str) -> None:
        self._mapping[self._key(audio)] = text

    def transcribe_text(self, audio: bytes) -> str:
        key = self._key(audio)
        if key in self._mapping:
            return self._mapping[key]
        if self.default_text is not None:
            return self.default_text
        raise TransportError("no fixture registered for this audio")


class FailingTranscriber:
    """Stub that always fails; used to exercise transport-error paths."""

    def __init__(self, status: Optional[int] = None):
        self.status = status
        self.calls = 0

    def transcribe_text(self, audio: bytes) -> str:
        self.calls += 1
        raise TransportError("injected ASR failure", status=self.status)


def transcribe(audio: bytes, client, fmt: str = "wav") -> TranscriptionResult:
    """Validate the audio contract and return the service transcription.

    Only 16 kHz mono PCM-16 WAV is accepted; anything else is rejected, not
    resampled.  An empty transcription is flagged in the log but returned.
    """
    if fmt.lower() != "wav":
        raise AudioFormatError(f"unsupported format {fmt!r}; expected {EXPECTED_WAV}")
    duration = validate_wav(audio)
    text = client.transcribe_text(audio)
    if not text.strip():
        logger.warning("transcription came back empty (%.2fs of audio)", duration)
    return TranscriptionResult(text=text, audio_duration=duration)


# --- generation --------------------------------------------------------------


class HttpChatClient:
    """Chat-completion JSON client with configurable base URL."""

    def __init__(self, base_url: str, api_key: str = ""):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key

    def complete(self, prompt: AssembledPrompt, config: GenerationConfig) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": config.model_name,
            "messages": prompt.to_messages(),
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }

        def send():
            try:
                resp = requests.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=config.timeout,
                )
            except Exception as exc:
                raise TransportError(f"chat request failed: {exc}") from exc
            if resp.status_code >= 400:
                raise TransportError(
                    f"chat service returned {resp.status_code}", status=resp.status_code
                )
            return resp.json()["choices"][0]["message"]["content"]

        return _retry_loop(send, config.retries, "generation")


class EchoLastExampleClient:
    """Returns the latex of the prompt's final example turn."""

    def complete(self, prompt: AssembledPrompt, config: GenerationConfig) -> str:
        if not prompt.example_turns:
            raise GenerationError("echo stub needs at least one example turn")
        return prompt.example_turns[-1][1]


class FixedResponseClient:
    """Always returns one configured string (the deliberately-wrong stub)."""

    def __init__(self, text: str):
        self.text = text

    def complete(self, prompt: AssembledPrompt, config: GenerationConfig) -> str:
        return self.text


class FailingChatClient:
    def __init__(self, status: Optional[int] = None):
        self.status = status
        self.calls = 0

    def complete(self, prompt: AssembledPrompt, config: GenerationConfig) -> str:
        self.calls += 1
        raise TransportError("injected LLM failure", status=self.status)


class NearestNeighborClient:
    """Answers with the latex of its own rank-1 retrieval for the query.

    Independent of the prompt's example turns, which makes it a second,
    stricter oracle for end-to-end pipeline tests.
    """

    def __init__(self, index, dataset, measure: str = "cosine"):
        self.index = index
        self.dataset = dataset
        self.measure = measure

    def complete(self, prompt: AssembledPrompt, config: GenerationConfig) -> str:
        from .retrieval import query

        results = query(self.index, prompt.query_text, k=1, measure=self.measure)
        return self.dataset.get(results[0].pair_id).latex


def generate(prompt: AssembledPrompt, config: GenerationConfig, client) -> str:
    """Run the chat completion and return the raw model text."""
    raw = client.complete(prompt, config)
    if not raw or not raw.strip():
        raise GenerationError("model returned an empty completion")
    return raw


_FENCE_RE = re.compile(r"^```([a-zA-Z]*)\n(.*?)\n?```$", re.DOTALL)
_FENCE_ONELINE_RE = re.compile(r"^```(.*?)```$", re.DOTALL)
_FENCE_LANGS = ("latex", "tex", "math", "")


def _unwrap_once(text: str) -> str:
    text = text.strip()
    match = _FENCE_RE.match(text)
    if match and match.group(1).lower() in _FENCE_LANGS:
        text = match.group(2).strip()
    else:
        match = _FENCE_ONELINE_RE.match(text)
        if match:
            text = match.group(1).strip()
    if text.lower().startswith("output:"):
        text = text[len("output:") :].strip()
    return text


def extract_latex(raw: str) -> str:
    """Peel prose wrapping off a model reply: whitespace, enclosing code
    fences, and leading ``Output:`` labels.  Unwrapping repeats until stable,
    so the function is idempotent; an empty result is an error."""
    text = raw.strip()
    while True:
        unwrapped = _unwrap_once(text)
        if unwrapped == text:
            break
        text = unwrapped
    if not text:
        raise GenerationError("no latex left after extraction")
    return text

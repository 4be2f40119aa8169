"""HTTP service exposing transcription, generation, and the combined
speech-to-latex flow consumed by the browser UI.

Four endpoints: ``GET /health``, ``POST /api/transcribe`` (multipart WAV),
``POST /api/generate`` (JSON), and ``POST /api/speech-to-latex`` (multipart
WAV plus optional overrides), the last being the exact composition of the
middle two.  Errors use the envelope ``{"error": ..., "stage": ...,
"detail": ...}`` so callers can tell a transcription failure from a
generation failure; a generation failure still returns the transcription.

The dataset and index load once at startup and are immutable afterwards;
per-request overrides (k, measure, prompt_id) make the service a live
experiment console without redeploys.  Credentials are read from config or
environment and never logged.
"""

import logging
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .clients import (
    AudioFormatError,
    EchoLastExampleClient,
    FixedResponseClient,
    FixtureTranscriber,
    GenerationConfig,
    GenerationError,
    HttpChatClient,
    HttpTranscriber,
    NearestNeighborClient,
    TransportError,
    extract_latex,
    generate,
    transcribe,
)
from .dataset import load_dataset
from .prompting import PROMPT_IDS, assemble, get_prompt
from .retrieval import MEASURES, Index, RetrievalError, get_provider, query

logger = logging.getLogger(__name__)

DEFAULT_CORS = ("http://localhost:5173", "http://localhost:3000", "http://127.0.0.1:5173")


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    dataset_path: Optional[str] = None
    index_path: Optional[str] = None
    default_k: int = 3
    default_measure: str = "cosine"
    default_prompt_id: str = "p2"
    embedding_provider: str = "offline"
    llm_client: str = "echo-last-example"  # echo-last-example | nearest-neighbor | fixed:<text> | http
    llm_base_url: str = ""
    llm_api_key: str = ""
    asr_client: str = "fixture"  # fixture | http
    asr_base_url: str = ""
    asr_api_key: str = ""
    asr_default_text: Optional[str] = None
    cors_origins: tuple = DEFAULT_CORS
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    @classmethod
    def from_json(cls, path) -> "ServiceConfig":
        import json

        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        generation = GenerationConfig(**data.pop("generation", {}))
        config = cls(**data, generation=generation)
        # credentials come from the environment when present, never the file
        config.llm_api_key = os.environ.get("SPEECH2LATEX_LLM_API_KEY", config.llm_api_key)
        config.asr_api_key = os.environ.get("SPEECH2LATEX_ASR_API_KEY", config.asr_api_key)
        return config


def _error(status: int, message: str, stage: Optional[str] = None, detail: str = "", **extra):
    body = {"error": message}
    if stage is not None:
        body["stage"] = stage
    if detail:
        body["detail"] = detail
    body.update(extra)
    return JSONResponse(status_code=status, content=body)


def _build_chat_client(config: ServiceConfig, dataset, index):
    name = config.llm_client
    if name == "echo-last-example":
        return EchoLastExampleClient()
    if name == "nearest-neighbor":
        return NearestNeighborClient(index, dataset, measure=config.default_measure)
    if name.startswith("fixed:"):
        return FixedResponseClient(name[len("fixed:") :])
    if name == "http":
        return HttpChatClient(config.llm_base_url, api_key=config.llm_api_key)
    raise ValueError(f"unknown llm client {name!r}")


def _build_transcriber(config: ServiceConfig):
    if config.asr_client == "fixture":
        return FixtureTranscriber(default_text=config.asr_default_text)
    if config.asr_client == "http":
        return HttpTranscriber(config.asr_base_url, api_key=config.asr_api_key)
    raise ValueError(f"unknown asr client {config.asr_client!r}")


def create_app(
    config: Optional[ServiceConfig] = None,
    *,
    dataset=None,
    index: Optional[Index] = None,
    transcriber=None,
    chat_client=None,
) -> FastAPI:
    """Build the service app.

    Objects passed as keyword arguments take precedence over config paths,
    which keeps tests free of filesystem setup.
    """
    config = config or ServiceConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        loaded_dataset = dataset
        loaded_index = index
        if loaded_dataset is None:
            if config.dataset_path is None:
                raise RuntimeError("service needs a dataset (path or object)")
            loaded_dataset = load_dataset(config.dataset_path)
        if loaded_index is None:
            if config.index_path is None:
                raise RuntimeError("service needs an index (path or object)")
            provider = get_provider(config.embedding_provider)
            loaded_index = Index.load(config.index_path, provider=provider)
        app.state.dataset = loaded_dataset
        app.state.index = loaded_index
        app.state.transcriber = transcriber or _build_transcriber(config)
        app.state.chat_client = chat_client or _build_chat_client(
            config, loaded_dataset, loaded_index
        )
        app.state.ready = True
        logger.info("service ready: %d indexed entries", len(loaded_index))
        yield

    app = FastAPI(title="speech2latex", version=__version__, lifespan=lifespan)
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def _ready() -> bool:
        return getattr(app.state, "ready", False)

    @app.get("/health")
    def health():
        if not _ready():
            return _error(503, "service is starting", detail="dataset/index not loaded yet")
        return {
            "status": "ok",
            "version": __version__,
            "index_size": len(app.state.index),
            "provider_id": app.state.index.provider_id,
        }

    async def _read_wav_upload(request: Request):
        content_type = request.headers.get("content-type", "")
        if not content_type.startswith("multipart/form-data"):
            return None, _error(
                415,
                "expected multipart/form-data with a WAV file field",
                detail=f"got content-type {content_type or '(none)'}",
            )
        form = await request.form()
        upload = form.get("file") or form.get("audio")
        if upload is None or isinstance(upload, str):
            return None, _error(415, "multipart body must carry a 'file' part")
        audio = await upload.read()
        return (audio, form), None

    def _do_transcribe(audio: bytes):
        result = transcribe(audio, app.state.transcriber)
        return {"text": result.text, "duration_s": result.audio_duration}

    def _do_generate(text: str, k, measure, prompt_id):
        if not text or not text.strip():
            raise ValueError("text must be non-empty")
        if k is None:
            k = config.default_k
        k = int(k)
        if k < 0:
            raise ValueError(f"k must be >= 0, got {k}")
        measure = measure or config.default_measure
        if measure not in MEASURES:
            raise ValueError(f"measure must be one of {', '.join(MEASURES)}; got {measure!r}")
        prompt_id = prompt_id or config.default_prompt_id
        if prompt_id not in PROMPT_IDS:
            raise ValueError(f"prompt_id must be one of {', '.join(PROMPT_IDS)}; got {prompt_id!r}")
        if k > 0:
            results = query(app.state.index, text, k, measure)
            examples = [app.state.dataset.get(r.pair_id) for r in results]
        else:
            results = []
            examples = []
        prompt = assemble(get_prompt(prompt_id), examples, text)
        raw = generate(prompt, config.generation, app.state.chat_client)
        return {
            "latex": extract_latex(raw),
            "examples": [{"pair_id": r.pair_id, "score": r.score} for r in results],
            "prompt_id": prompt_id,
            "k": k,
            "measure": measure if k > 0 else None,
        }

    @app.post("/api/transcribe")
    async def api_transcribe(request: Request):
        if not _ready():
            return _error(503, "service is starting")
        payload, err = await _read_wav_upload(request)
        if err is not None:
            return err
        audio, _ = payload
        try:
            return _do_transcribe(audio)
        except AudioFormatError as exc:
            return _error(415, "unsupported audio format", stage="transcription", detail=str(exc))
        except TransportError as exc:
            return _error(502, "transcription service failure", stage="transcription", detail=str(exc))

    @app.post("/api/generate")
    async def api_generate(request: Request):
        if not _ready():
            return _error(503, "service is starting")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "body must be JSON", stage="generation")
        try:
            return _do_generate(
                body.get("text", ""),
                body.get("k"),
                body.get("measure"),
                body.get("prompt_id"),
            )
        except (ValueError, RetrievalError) as exc:
            return _error(400, "invalid request", stage="generation", detail=str(exc))
        except (TransportError, GenerationError) as exc:
            return _error(502, "generation service failure", stage="generation", detail=str(exc))

    @app.post("/api/speech-to-latex")
    async def api_speech_to_latex(request: Request):
        if not _ready():
            return _error(503, "service is starting")
        payload, err = await _read_wav_upload(request)
        if err is not None:
            return err
        audio, form = payload
        try:
            transcription = _do_transcribe(audio)
        except AudioFormatError as exc:
            return _error(415, "unsupported audio format", stage="transcription", detail=str(exc))
        except TransportError as exc:
            return _error(502, "transcription service failure", stage="transcription", detail=str(exc))
        try:
            generated = _do_generate(
                transcription["text"],
                form.get("k"),
                form.get("measure"),
                form.get("prompt_id"),
            )
        except (ValueError, RetrievalError) as exc:
            return _error(
                400, "invalid request", stage="generation", detail=str(exc),
                text=transcription["text"],
            )
        except (TransportError, GenerationError) as exc:
            return _error(
                502, "generation service failure", stage="generation", detail=str(exc),
                text=transcription["text"],
            )
        return {
            "text": transcription["text"],
            "latex": generated["latex"],
            "examples": generated["examples"],
        }

    return app

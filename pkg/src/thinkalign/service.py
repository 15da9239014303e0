"""HTTP scoring service: lets an external trainer fetch rewards over
JSON without linking this package.

POST /v1/score scores one rollout (judge consulted lazily when wired);
GET /healthz reports liveness. Malformed records get 400, an unreachable
judge maps to 502.
"""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from thinkalign.backends import BackendError, HttpJudgeClient, JudgeBackend
from thinkalign.langid import LANGUAGES, LanguageDetector
from thinkalign.rewards import score_rollout

log = logging.getLogger(__name__)


class ScoreRequest(BaseModel):
    question: str = Field(min_length=1)
    lang: str
    gold: str = Field(min_length=1)
    response: str = Field(min_length=1)
    en_reference_think: Optional[str] = None


def create_app(judge: Optional[JudgeBackend] = None, detector: Optional[LanguageDetector] = None) -> FastAPI:
    """Build the scoring app around an optional judge handle."""
    app = FastAPI(title="thinkalign scoring service")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        # schema violations are client errors, not unprocessable entities
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/v1/score")
    async def score(request: ScoreRequest) -> JSONResponse:
        if request.lang not in LANGUAGES:
            return JSONResponse(status_code=400, content={"detail": f"unknown lang {request.lang!r}"})
        try:
            breakdown = score_rollout(
                request.response,
                request.lang,
                request.gold,
                en_reference_think=request.en_reference_think,
                judge=judge,
                question=request.question,
                detector=detector,
            )
        except BackendError as exc:
            log.error("judge unreachable: %s", exc)
            return JSONResponse(status_code=502, content={"detail": f"judge unreachable: {exc}"})
        return JSONResponse(status_code=200, content=breakdown.to_dict())

    return app


def serve_scores(
    host: str = "127.0.0.1",
    port: int = 8080,
    judge: Optional[JudgeBackend] = None,
    detector: Optional[LanguageDetector] = None,
) -> None:
    """Run the scoring service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(judge=judge, detector=detector), host=host, port=port, log_level="info")


def judge_from_config(config) -> HttpJudgeClient:
    return HttpJudgeClient(config)

# vidscore/mock_server.py
from __future__ import annotations

import asyncio
import datetime as dt
import time
import uuid
from collections import defaultdict
from typing import Any, Callable, Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .providers.sim import SimJudgeProvider, chat_completion_response

# payload -> reply text
Responder = Callable[[dict[str, Any]], str]


def canned_responder(text: str) -> Responder:
    return lambda payload: text


def create_mock_app(
    responder: Optional[Responder] = None,
    fail_first: int = 0,
    fail_status: int = 503,
    latency_s: float = 0.0,
    peak: float = 0.7,
) -> FastAPI:
    """
    A local chat-completions judge for tests and dry runs.

    responder   builds the reply text from the request payload (default: the sim judge)
    fail_first  the first N completion requests answer fail_status
    latency_s   artificial delay inside each request, so concurrency is observable
    """
    app = FastAPI(title="vidscore-mock-judge")
    sim = SimJudgeProvider(peak=peak)

    app.state.calls = 0
    app.state.failures_left = fail_first
    app.state.in_flight = 0
    app.state.peak_in_flight = 0
    app.state.metrics = {
        "started_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "requests_total": 0,
        "by_path": defaultdict(int),
        "by_status": defaultdict(int),
        "latency_ms_sum": 0.0,
        "latency_ms_count": 0,
    }

    # -------------------------
    # Middleware: request id + metrics + timing
    # -------------------------
    @app.middleware("http")
    async def metrics_middleware(request: Request, call_next):
        t0 = time.perf_counter()
        req_id = request.headers.get("x-request-id") or str(uuid.uuid4())

        response: Response = await call_next(request)

        dt_ms = (time.perf_counter() - t0) * 1000.0
        m = app.state.metrics
        m["requests_total"] += 1
        m["by_path"][request.url.path] += 1
        m["by_status"][str(response.status_code)] += 1
        m["latency_ms_sum"] += dt_ms
        m["latency_ms_count"] += 1

        response.headers["X-Request-Id"] = req_id
        response.headers["X-Response-Time-Ms"] = f"{dt_ms:.2f}"
        return response

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "ts": dt.datetime.now(dt.timezone.utc).isoformat()}

    @app.get("/metrics")
    def metrics():
        m = app.state.metrics
        avg = m["latency_ms_sum"] / m["latency_ms_count"] if m["latency_ms_count"] else 0.0
        return {
            "started_at": m["started_at"],
            "requests_total": m["requests_total"],
            "by_path": dict(m["by_path"]),
            "by_status": dict(m["by_status"]),
            "latency_ms_avg": round(avg, 2),
            "completions": app.state.calls,
            "in_flight": app.state.in_flight,
            "peak_in_flight": app.state.peak_in_flight,
        }

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request):
        payload = await request.json()
        app.state.calls += 1
        app.state.in_flight += 1
        app.state.peak_in_flight = max(app.state.peak_in_flight, app.state.in_flight)
        try:
            if latency_s > 0:
                await asyncio.sleep(latency_s)
            if app.state.failures_left > 0:
                app.state.failures_left -= 1
                return JSONResponse(status_code=fail_status, content={"error": "scripted failure"})

            model = str(payload.get("model", "mock"))
            want_logprobs = bool(payload.get("logprobs"))
            top = int(payload.get("top_logprobs") or 5)
            if responder is None:
                return await sim.run(payload)
            return chat_completion_response(
                responder(payload), model=model, logprobs=want_logprobs, top_logprobs=top, peak=peak
            )
        finally:
            app.state.in_flight -= 1

    return app

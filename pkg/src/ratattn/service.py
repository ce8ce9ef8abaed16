"""HTTP judgment-collection service.

State is event-sourced from the hits file plus the append-only judgment
log: every mutation is validated, appended durably (flush + fsync), and
only then applied and acknowledged, so a restart reconstructs the exact
same aggregates. Variant identity (which model produced which panel) never
leaves the server.
"""

from __future__ import annotations

import os
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .harness import (
    DuplicateJudgment,
    HarnessState,
    Hit,
    Judgment,
    Resolution,
    UnknownHit,
    UnknownWorker,
    tabulate,
)

TERMINAL = (Resolution.A, Resolution.B, Resolution.EQUAL, Resolution.UNRESOLVED)


class JudgmentIn(BaseModel):
    hit_id: str
    worker_id: str
    choice: str  # LEFT | RIGHT | EQUAL


def hit_payload(hit: Hit) -> dict:
    """Client view of a hit: two anonymous panels in display order."""
    def panel(variant) -> dict:
        marked = set(variant.indices)
        return {"sentences": [
            {"index": i, "text": t, "highlight": i in marked}
            for i, t in enumerate(hit.sentences)
        ]}

    pa, pb = panel(hit.variant_a), panel(hit.variant_b)
    left, right = (pa, pb) if hit.left_is_a else (pb, pa)
    return {"hit_id": hit.hit_id, "doc_label": hit.label,
            "left": left, "right": right}


def results_payload(state: HarnessState, labels: tuple[str, str]) -> dict:
    votes = state.votes()
    terminal = [v for v in votes.values() if v in TERMINAL]
    pending = sum(1 for v in votes.values() if v not in TERMINAL)
    resolved = [v for v in terminal if v is not Resolution.UNRESOLVED]
    unresolved = len(terminal) - len(resolved)
    payload = {"resolved": len(resolved), "unresolved": unresolved,
               "pending": pending, "table": None}
    if resolved:
        payload["table"] = tabulate(terminal, labels).to_json()
    return payload


def create_app(hits_path: str | Path, log_path: str | Path,
               static_dir: str | Path | None = None) -> FastAPI:
    state = HarnessState.from_files(hits_path, log_path)
    sources = _source_labels(state)
    lock = threading.Lock()
    app = FastAPI(title="ratattn judgment service")

    @app.get("/api/hits/next")
    def next_hit(worker_id: str = ""):
        if not worker_id:
            return JSONResponse({"detail": "worker_id required"}, status_code=422)
        with lock:
            state.register_worker(worker_id)
            hit = state.assign_next_hit(worker_id)
            if hit is None:
                return Response(status_code=204)
            return hit_payload(hit)

    @app.post("/api/judgments", status_code=201)
    def post_judgment(j: JudgmentIn):
        if j.choice not in ("LEFT", "RIGHT", "EQUAL"):
            return JSONResponse({"detail": f"bad choice {j.choice!r}"},
                                status_code=422)
        with lock:
            hit = state.hits.get(j.hit_id)
            if hit is None:
                return JSONResponse({"detail": f"unknown hit {j.hit_id!r}"},
                                    status_code=422)
            choice = hit.choice_from_side(j.choice)
            try:
                state.check_judgment(j.hit_id, j.worker_id, choice)
            except DuplicateJudgment:
                return JSONResponse({"detail": "already judged"}, status_code=409)
            except (UnknownWorker, UnknownHit) as exc:
                return JSONResponse({"detail": str(exc)}, status_code=422)
            judgment = Judgment(hit_id=j.hit_id, worker_id=j.worker_id,
                                choice=choice, ts=time.time())
            _append_durable(log_path, judgment)
            state.apply_judgment(judgment)
            return {"status": "recorded", "hit_id": j.hit_id}

    @app.get("/api/results")
    def results():
        with lock:
            return results_payload(state, sources)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")
    return app


def _append_durable(log_path: str | Path, judgment) -> None:
    import json as _json
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(_json.dumps(judgment.to_json()) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _source_labels(state: HarnessState) -> tuple[str, str]:
    for hid in state.order:
        hit = state.hits[hid]
        if not hit.is_gold:
            return (hit.variant_a.source, hit.variant_b.source)
    return ("A", "B")

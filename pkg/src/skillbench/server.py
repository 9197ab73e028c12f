"""HTTP/WebSocket service around a workbench session.

One background task drives the control loop; request handlers and the loop
share the asyncio event loop, so knowledge-graph writes are naturally
serialized. Stream subscribers get world frames at the observation rate
plus task-boundary events and outcomes.
"""

from __future__ import annotations

import asyncio
import contextlib
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .scene import load_scene
from .session import Workbench


class CommandRequest(BaseModel):
    text: str


class CommandErrorPayload(BaseModel):
    message: str
    kind: str = "error"
    offset: Optional[int] = None
    expected: Optional[list[str]] = None
    suggestions: Optional[list[str]] = None


class CommandResponse(BaseModel):
    event_id: Optional[int] = None
    result: Optional[Any] = None
    error: Optional[CommandErrorPayload] = None


class StreamHub:
    """Fan-out of controller events to websocket subscriber queues."""

    def __init__(self):
        self.queues: set[asyncio.Queue] = set()

    def register(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=256)
        self.queues.add(queue)
        return queue

    def unregister(self, queue: asyncio.Queue) -> None:
        self.queues.discard(queue)

    def push(self, kind: str, payload: dict) -> None:
        message = {"type": kind, "payload": payload}
        for queue in list(self.queues):
            try:
                queue.put_nowait(message)
            except asyncio.QueueFull:
                # A stalled client drops frames rather than stalling the loop.
                pass


def create_app(
    workbench: Optional[Workbench] = None,
    scene_path: Optional[str] = None,
    pace: Optional[float] = None,
    frontend_dir: Optional[str] = None,
    snapshot_path: Optional[str] = None,
) -> FastAPI:
    wb = workbench or Workbench(scene=load_scene(scene_path) if scene_path else None)
    hub = StreamHub()
    wb.controller.listeners.append(hub.push)
    if pace is None:
        # Default pacing makes sim time track wall time.
        pace = wb.scene.controller.substeps * wb.world.dt

    async def control_loop():
        while True:
            wb.run_cycle()
            await asyncio.sleep(pace)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(control_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
            if snapshot_path:
                wb.snapshot(snapshot_path)

    app = FastAPI(title="skillbench", lifespan=lifespan)
    app.state.workbench = wb

    @app.post("/api/command", response_model=CommandResponse, response_model_exclude_none=True)
    def post_command(request: CommandRequest):
        return wb.submit(request.text)

    @app.get("/api/tasks")
    def get_tasks(n: int = Query(default=20, ge=0)):
        return {"tasks": wb.task_history(n)}

    @app.get("/api/skills")
    def get_skills():
        return {"skills": wb.kg.list_skills()}

    @app.get("/api/world")
    def get_world():
        return wb.world_frame()

    @app.get("/api/graph")
    def get_graph():
        return Response(content=wb.kg.to_document(), media_type="application/json")

    @app.websocket("/api/stream")
    async def stream(socket: WebSocket):
        await socket.accept()
        queue = hub.register()
        try:
            await socket.send_json({"type": "world", "payload": wb.world_frame()})
            while True:
                message = await queue.get()
                await socket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            hub.unregister(queue)

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app

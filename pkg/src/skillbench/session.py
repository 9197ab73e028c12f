"""The workbench: one programming session wiring the simulator, the
knowledge graph and the task controller behind a single facade.

All mutation funnels through here under one lock, which is the embodiment
of the "one writer at a time" rule: command handlers and the control loop
never touch the graph or the world concurrently.
"""

from __future__ import annotations

import threading
from datetime import datetime
from typing import Optional

from . import commands
from .controller import TaskController, TaskOutcome
from .graph import KnowledgeGraph, Label, restore
from .scene import Scene, default_scene
from .skills import COMMAND_SKILLS, KIND_ORDER


class IdleTimeout(RuntimeError):
    pass


class Workbench:
    def __init__(
        self,
        scene: Optional[Scene] = None,
        session_start: Optional[datetime] = None,
        load_path: Optional[str] = None,
    ):
        self.scene = scene or default_scene()
        self.world = self.scene.build_world()
        self._lock = threading.RLock()
        if load_path:
            self.kg = restore(load_path)
            # resume the session clock; fresh events must not run backwards
            self.world.t = max(self.world.t, self.kg.last_event_ts / 1000.0)
        else:
            self.kg = KnowledgeGraph(session_start=session_start)
        self.agent_id, self.subject_ids, self.color_to_object = self._bind_graph()
        self.controller = TaskController(
            self.world, self.kg, self.agent_id, self.subject_ids, self.scene.controller
        )
        # A restored graph may carry already-finished tasks; never re-run them.
        done = self.kg.last_n_tasked(self.kg.tasked_count())
        if done:
            self.controller.last_processed_event = done[-1].event_id
        self.controller.observe_now()

    def _bind_graph(self):
        """Find or create the agent/object/skill nodes for this scene."""
        by_name: dict[str, int] = {}
        for node in self.kg.nodes.values():
            if node.label in (Label.AGENT, Label.OBJECT):
                by_name[node.attributes.get("Name")] = node.element_id

        robot = self.world.robot
        agent_id = by_name.get(self.world.robot_name)
        if agent_id is None:
            agent_id = self.kg.add_agent(
                self.world.robot_name,
                robot.tip.translation.tolist(),
                robot.tip.orientation.tolist(),
            )
        subject_ids = {self.world.robot_name: agent_id}
        color_to_object: dict[str, int] = {}
        for brick in self.world.bricks:
            node_id = by_name.get(brick.name)
            if node_id is None:
                node_id = self.kg.add_object(
                    brick.name,
                    brick.color,
                    [0.0, 0.0, 0.0],
                    brick.affordances.tolist(),
                    brick.mesh.tolist(),
                )
            subject_ids[brick.name] = node_id
            color_to_object[brick.color] = node_id

        for kind in KIND_ORDER:
            if self.kg.skill_kind(kind.value) is None:
                self.kg.register_skill(kind.value, "base")
        for name in COMMAND_SKILLS:
            if self.kg.skill_kind(name) is None:
                self.kg.register_skill(name, "command")
        return agent_id, subject_ids, color_to_object

    # ------------------------------------------------------------------
    # command surface

    def submit(self, text: str) -> dict:
        """Parse and dispatch one command line; returns the response payload."""
        with self._lock:
            return commands.execute(text, self)

    def insert_task(self, signature: str, skill: str, color: Optional[str], params: dict) -> int:
        with self._lock:
            event_id = self.kg.insert_tasked(
                agent=self.agent_id,
                signature=signature,
                skill=skill,
                object_ref=self.color_to_object.get(color) if color else None,
                params=params,
                ts=self.controller.now_ms(),
            )
        self.controller.emit(
            "event",
            {"event_id": event_id, "signature": signature, "ts": self.controller.now_ms()},
        )
        return event_id

    def task_history(self, n: int) -> list[dict]:
        records = self.kg.last_n_tasked(n)
        out = []
        for rec in records:
            entry = {"event_id": rec.event_id, "ts": rec.ts, "signature": rec.signature}
            outcome = self.kg.latest_observation(rec.event_id)
            if outcome is not None:
                entry["outcome"] = outcome.params.get("outcome")
                entry["detail"] = outcome.params.get("detail", "")
            out.append(entry)
        return out

    def save_recent_tasks(self, name: str, n: int) -> int:
        """Recompile the last ``n`` tasks into steps and store them as a skill."""
        total = self.kg.tasked_count()
        if n > total:
            raise commands.CommandValidationError(
                f"cannot save {n} tasks; only {total} in the history"
            )
        steps = []
        for rec in self.kg.last_n_tasked(n):
            skill = rec.skill or ""
            params = dict(rec.params or {})
            if skill in COMMAND_SKILLS:
                steps.extend(COMMAND_SKILLS[skill].compile(**params))
            elif self.kg.skill_kind(skill) == "composite":
                steps.extend(self.kg.load_skill(skill, params.get("substitution") or {}))
            else:
                raise commands.CommandValidationError(
                    f"task {rec.event_id} used unknown skill {skill!r}; cannot save"
                )
        self.kg.save_skill(name, steps)
        return len(steps)

    def reset_world(self) -> None:
        with self._lock:
            if self.controller.active is not None:
                self.controller.request_stop()
                self.run_cycle()
            fresh = self.scene.build_world()
            fresh.t = self.world.t  # the session clock never runs backwards
            self.world.__dict__.update(fresh.__dict__)
            self.controller.observe_now()

    # ------------------------------------------------------------------
    # control loop

    def run_cycle(self) -> None:
        with self._lock:
            self.controller.run_cycle()

    def run_until_idle(self, max_sim_seconds: float = 300.0) -> list[TaskOutcome]:
        """Run cycles until every queued task has an outcome."""
        start_count = len(self.controller.outcomes)
        deadline = self.world.t + max_sim_seconds
        while self.controller.busy:
            if self.world.t > deadline:
                raise IdleTimeout(f"tasks still pending after {max_sim_seconds} sim seconds")
            self.run_cycle()
        return self.controller.outcomes[start_count:]

    @property
    def outcomes(self) -> list[TaskOutcome]:
        return self.controller.outcomes

    def world_frame(self) -> dict:
        with self._lock:
            frame = self.controller.last_frame
            if frame is None:
                frame = self.controller.observe_now()
            return frame

    def snapshot(self, path: str) -> None:
        with self._lock:
            self.kg.snapshot(path)

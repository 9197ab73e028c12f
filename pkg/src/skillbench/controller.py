"""Session orchestrator: builds the main behaviour tree, polls the knowledge
graph for new tasks, routes base-skill steps through the chooser, steps the
simulator and records outcomes.

The main tree routes through an either-or gate:

    Fallback(
        Sequence(XorGate, Chooser(move, gripper, perception)),
        Sequence(Condition(steps remaining), CustomSkill),
    )

Every command, including a direct base-skill call, is scheduled as a custom
task so there is exactly one scheduling path. New tasks queue behind the
active one; only a stop request preempts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import bt
from .bt import Blackboard, TickStatus
from .graph import (
    EventRecord,
    GraphError,
    KnowledgeGraph,
)
from .scene import ControllerConfig
from .skills import (
    COMMAND_SKILLS,
    KIND_ORDER,
    BaseSkillBank,
    CustomSkillNode,
    SkillCompileError,
    StepDataError,
    init_board,
    mirror_world,
)
from .world import World


class ConfigurationError(Exception):
    pass


@dataclass
class TaskOutcome:
    task_id: int
    status: str  # "Succeeded" | "Failed" | "Stopped"
    detail: str
    ts: int

    def payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "status": self.status,
            "detail": self.detail,
            "ts": self.ts,
        }


def build_main_tree(
    library: list[str], bank: BaseSkillBank, custom: CustomSkillNode
) -> bt.Node:
    """Assemble the main tree; the library must provide all three base skills."""
    missing = [k.value for k in KIND_ORDER if k.value not in library]
    if missing:
        raise ConfigurationError(f"skill library is missing base skills: {missing}")
    chooser_branch = bt.Sequence(
        [bt.XorGate(name="xor"), bt.Chooser(bank.subtrees(), name="chooser")],
        name="base-skill-branch",
    )
    custom_branch = bt.Sequence(
        [bt.Condition(lambda board: board.get("n") > 0, name="steps-remaining"), custom],
        name="custom-skill-branch",
    )
    return bt.Fallback([chooser_branch, custom_branch], name="main")


class TaskController:
    def __init__(
        self,
        world: World,
        kg: KnowledgeGraph,
        agent_id: int,
        subject_ids: dict[str, int],
        config: Optional[ControllerConfig] = None,
    ):
        self.world = world
        self.kg = kg
        self.agent_id = agent_id
        self.subject_ids = subject_ids
        self.config = config or ControllerConfig()
        self.board = Blackboard(len(KIND_ORDER))
        init_board(self.board, world)
        self.bank = BaseSkillBank(world, self.config.gripper_timeout)
        self.custom = CustomSkillNode(self.bank)
        library = [entry["name"] for entry in kg.list_skills()]
        self.tree = build_main_tree(library, self.bank, self.custom)

        self.active: Optional[int] = None
        self.last_processed_event = 0
        self.n = 0
        self.stop_requested = False
        self.outcomes: list[TaskOutcome] = []
        self.cycle_index = 0
        self.listeners: list[Callable[[str, dict], None]] = []
        self.last_frame: Optional[dict] = None

        cycle_sim_time = self.config.substeps * world.dt
        self._cycles_per_observation = max(
            1, int(round(1.0 / (self.config.observation_rate * cycle_sim_time)))
        )

    # ------------------------------------------------------------------

    def now_ms(self) -> int:
        return int(round(self.world.t * 1000))

    def emit(self, kind: str, payload: dict) -> None:
        for listener in self.listeners:
            listener(kind, payload)

    def request_stop(self) -> None:
        self.stop_requested = True

    @property
    def busy(self) -> bool:
        return self.active is not None or bool(self.kg.tasked_after(self.last_processed_event))

    # ------------------------------------------------------------------

    def poll(self) -> Optional[EventRecord]:
        """Oldest Tasked event not yet processed, if any."""
        pending = self.kg.tasked_after(self.last_processed_event)
        return pending[0] if pending else None

    def schedule(self, event: EventRecord) -> None:
        if self.active is not None:
            raise ConfigurationError("a task is already active")
        skill = event.skill or ""
        params = dict(event.params or {})

        steps = None
        precondition = None
        error = None
        if skill in COMMAND_SKILLS:
            command = COMMAND_SKILLS[skill]
            precondition = command.precondition
            try:
                steps = command.compile(**params)
            except (SkillCompileError, StepDataError, TypeError, ValueError) as exc:
                error = f"cannot compile {skill}: {exc}"
        elif self.kg.skill_kind(skill) == "composite":
            try:
                steps = self.kg.load_skill(skill, params.get("substitution") or {})
            except (GraphError, StepDataError, ValueError) as exc:
                error = f"cannot load {skill}: {exc}"
        else:
            error = f"unknown skill {skill!r}"

        if error is None and not steps:
            error = f"skill {skill!r} produced no steps"
        if error is None and precondition is not None:
            ok, reason = precondition(self.world)
            if not ok:
                error = reason

        if error is not None:
            self._finalize(event.event_id, "Failed", error)
            return
        self.activate(event.event_id, steps)

    def activate(self, task_id: int, steps) -> None:
        """Install a resolved step list as the active custom task."""
        if self.active is not None:
            raise ConfigurationError("a task is already active")
        self.custom.configure(steps)
        self.n = len(steps)
        self.board.set("n", self.n)
        self.active = task_id
        self.observe_now()

    def run_cycle(self) -> None:
        """One control cycle: stop handling, scheduling, sim substeps, one
        tree tick, bookkeeping, periodic observation."""
        self.cycle_index += 1

        if self.stop_requested:
            self.stop_requested = False
            self.world.cancel_segment()
            if self.active is not None:
                task_id = self.active
                self._clear_task_state()
                self._finalize(task_id, "Stopped", "stopped by user")

        if self.active is None:
            event = self.poll()
            if event is not None:
                self.schedule(event)

        for _ in range(self.config.substeps):
            self.world.step(self.world.dt)
        mirror_world(self.board, self.world)

        flags_before = list(self.board.chooser_flags)
        bt.tick(self.tree, self.board)

        raised = [i for i, f in enumerate(flags_before) if f]
        if len(raised) == 1:
            subtree = self.bank.subtrees()[raised[0]]
            status = subtree.last_status
            if status is TickStatus.SUCCESS:
                self.n = max(0, self.n - 1)
                self.board.set("n", self.n)
            elif status is TickStatus.FAILURE and self.active is not None:
                detail = (
                    self.board.get("last_failure")
                    if "last_failure" in self.board
                    else f"{KIND_ORDER[raised[0]].value} step failed"
                )
                task_id = self.active
                self._clear_task_state()
                self._finalize(task_id, "Failed", detail)
        elif self.active is not None and self.custom.last_status is TickStatus.FAILURE:
            task_id = self.active
            detail = "step is not a known base skill"
            self._clear_task_state()
            self._finalize(task_id, "Failed", detail)

        if (
            self.active is not None
            and self.n == 0
            and not any(self.board.chooser_flags)
            and self.custom.state.done()
        ):
            task_id = self.active
            self._clear_task_state()
            self._finalize(task_id, "Succeeded", "")

        if self.cycle_index % self._cycles_per_observation == 0:
            self.observe_now()

    # ------------------------------------------------------------------

    def observe_now(self) -> dict:
        """Write one Observed event per entity and cache the world frame."""
        ts = self.now_ms()
        frame: dict = {"ts": ts, "robot": None, "bricks": []}
        for state in self.world.observe():
            subject = self.subject_ids.get(state["name"])
            if subject is not None:
                self.kg.insert_observed(subject, {k: v for k, v in state.items()}, ts)
            entry = {k: v for k, v in state.items() if k != "entity"}
            if state["entity"] == "robot":
                frame["robot"] = entry
            else:
                frame["bricks"].append(entry)
        self.last_frame = frame
        self.emit("world", frame)
        return frame

    def _clear_task_state(self) -> None:
        self.board.clear_chooser_flags()
        self.n = 0
        self.board.set("n", 0)
        self.bank.clear(self.board)
        self.custom.configure([])
        bt.reset(self.tree)

    def _finalize(self, task_id: int, status: str, detail: str) -> None:
        ts = self.now_ms()
        self.kg.insert_observed(task_id, {"outcome": status, "detail": detail}, ts)
        outcome = TaskOutcome(task_id, status, detail, ts)
        self.outcomes.append(outcome)
        self.last_processed_event = task_id
        self.active = None
        self.emit("outcome", outcome.payload())
        self.observe_now()

"""The base-skill set (MOVE, GRIPPER, PERCEPTION), derived pick-and-place
skills compiled to base-skill steps, and the custom-skill node that feeds
steps to the chooser one at a time.

Every base skill is a small behaviour tree, Fallback(post, Sequence(pre,
controller)): if the post-condition already holds the controller is never
touched; the controller keeps returning Running until the post-condition
becomes true on a later tick. Conditions read only the blackboard, so the
world is mirrored onto the board once per control cycle (``mirror_world``).

Command-level units are centimeters and XYZ Euler degrees (world frame,
relative to the canonical tool-down pose); world state is meters and
quaternions.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import bt
from .bt import Blackboard, TickStatus
from .geometry import (
    IDENTITY_QUAT,
    Pose,
    euler_xyz_deg_to_quat,
    normalize_quat,
    quat_angle_deg,
)
from .world import LatchState, World

TOOL_DOWN_QUAT = IDENTITY_QUAT

MOVE_TOLERANCE_M = 1e-3
MOVE_TOLERANCE_DEG = 0.5
GRIPPER_WAIT_TIMEOUT_S = 5.0


class BaseSkillKind(Enum):
    MOVE = "MOVE"
    GRIPPER = "GRIPPER"
    PERCEPTION = "PERCEPTION"


KIND_ORDER = (BaseSkillKind.MOVE, BaseSkillKind.GRIPPER, BaseSkillKind.PERCEPTION)

_SYMBOLIC_FIELDS = ("object_ref", "store_key")

_MOVE_FORMS = (
    ({"goal_translation", "goal_orientation"}, {"duration"}),
    ({"object_ref", "offset"}, {"goal_orientation", "duration"}),
    ({"anchor", "offset"}, {"z_abs", "goal_orientation", "duration"}),
)


class StepDataError(ValueError):
    pass


class SkillCompileError(ValueError):
    pass


def _validate_step_data(kind: BaseSkillKind, data: dict) -> None:
    keys = set(data)
    if kind is BaseSkillKind.MOVE:
        for required, optional in _MOVE_FORMS:
            if required <= keys <= required | optional:
                if "anchor" in keys and data["anchor"] != "tip":
                    raise StepDataError(f"MOVE anchor must be 'tip', got {data['anchor']!r}")
                return
        raise StepDataError(f"MOVE step has unrecognized data keys {sorted(keys)}")
    if kind is BaseSkillKind.GRIPPER:
        if not {"on"} <= keys <= {"on", "wait_for"}:
            raise StepDataError(f"GRIPPER step has unrecognized data keys {sorted(keys)}")
        if data.get("wait_for") not in (None, "Locked", "Free"):
            raise StepDataError(f"GRIPPER wait_for must be Locked/Free, got {data['wait_for']!r}")
        return
    if keys != {"object_ref", "store_key"}:
        raise StepDataError(f"PERCEPTION step has unrecognized data keys {sorted(keys)}")


@dataclass(frozen=True)
class TaskStep:
    """One parameterized base-skill invocation."""

    kind: BaseSkillKind
    data: dict

    def __post_init__(self):
        _validate_step_data(self.kind, self.data)

    @staticmethod
    def from_wire(kind: str, data: dict) -> "TaskStep":
        return TaskStep(BaseSkillKind(kind), data)


def collect_object_refs(steps: list[TaskStep]) -> set[str]:
    refs = set()
    for step in steps:
        for field_name in _SYMBOLIC_FIELDS:
            value = step.data.get(field_name)
            if isinstance(value, str):
                refs.add(value)
    return refs


def substitute_steps(steps: list[TaskStep], mapping: dict) -> list[TaskStep]:
    """Rewrite symbolic object references through a substitution map."""
    out = []
    for step in steps:
        data = copy.deepcopy(step.data)
        for field_name in _SYMBOLIC_FIELDS:
            value = data.get(field_name)
            if isinstance(value, str) and value in mapping:
                data[field_name] = mapping[value]
        out.append(TaskStep(step.kind, data))
    return out


# ----------------------------------------------------------------------
# blackboard contract

def brick_key(color: str, attr: str) -> str:
    return f"brick:{color}:{attr}"


def init_board(board: Blackboard, world: World) -> None:
    """Seed static scene facts the skill conditions rely on."""
    board.set("workspace", world.workspace)
    board.set("brick_colors", [b.color for b in world.bricks])
    for b in world.bricks:
        board.set(brick_key(b.color, "affordances"), b.affordances.copy())
    board.set("n", 0)
    mirror_world(board, world)


def mirror_world(board: Blackboard, world: World) -> None:
    """Refresh the per-cycle world snapshot the conditions read."""
    board.set("tip_translation", world.robot.tip.translation.copy())
    board.set("tip_orientation", world.robot.tip.orientation.copy())
    board.set("segment_active", world.segment is not None)
    board.set("gripper_on", world.robot.gripper_on)
    board.set("latch", world.robot.latch.value)
    board.set("held", world.robot.held or "")
    for b in world.bricks:
        board.set(brick_key(b.color, "translation"), b.pose.translation.copy())
        board.set(brick_key(b.color, "orientation"), b.pose.orientation.copy())


class GoalResolutionError(ValueError):
    pass


def _resolve_move_goal(data: dict, board: Blackboard):
    orientation = normalize_quat(data.get("goal_orientation", TOOL_DOWN_QUAT))
    duration = data.get("duration")
    if "goal_translation" in data:
        translation = np.asarray(data["goal_translation"], dtype=float).copy()
    elif data.get("anchor") == "tip":
        translation = board.get("tip_translation") + np.asarray(data["offset"], dtype=float)
        if "z_abs" in data:
            translation[2] = float(data["z_abs"])
    else:
        key = data["object_ref"]
        if key not in board:
            raise GoalResolutionError(f"no keypoint stored for {key!r}; run perception first")
        translation = np.asarray(board.get(key), dtype=float) + np.asarray(
            data["offset"], dtype=float
        )
    return translation, orientation, duration


class BaseSkillBank:
    """The three base-skill subtrees plus their installed task data.

    ``setup`` is the SetUpTask hook: it installs the step's controller data
    on the blackboard, resets the subtree, and raises the matching chooser
    flag so the next control cycle routes into it.
    """

    def __init__(self, world: World, gripper_timeout: float = GRIPPER_WAIT_TIMEOUT_S):
        self.world = world
        self.gripper_timeout = gripper_timeout
        self.invocation_log: list[tuple[str, dict]] = []
        self._slot_data: dict[BaseSkillKind, dict] = {}
        self._trees = {kind: self._build(kind) for kind in KIND_ORDER}

    def subtree(self, kind: BaseSkillKind) -> bt.Node:
        return self._trees[kind]

    def subtrees(self) -> list[bt.Node]:
        return [self._trees[kind] for kind in KIND_ORDER]

    @staticmethod
    def flag_index(kind: BaseSkillKind) -> int:
        return KIND_ORDER.index(kind)

    def setup(self, kind: BaseSkillKind, data: dict, board: Blackboard) -> None:
        _validate_step_data(kind, data)
        self._slot_data[kind] = copy.deepcopy(data)
        self._trees[kind].reset()
        if kind is BaseSkillKind.MOVE:
            for suffix in ("goal_translation", "goal_orientation", "duration", "error"):
                board.delete(f"move:{suffix}")
            try:
                translation, orientation, duration = _resolve_move_goal(data, board)
            except (GoalResolutionError, bt.BlackboardKeyError) as exc:
                board.set("move:error", str(exc))
            else:
                board.set("move:goal_translation", translation)
                board.set("move:goal_orientation", orientation)
                board.set("move:duration", duration)
        elif kind is BaseSkillKind.GRIPPER:
            board.set("gripper:on", bool(data["on"]))
            board.set("gripper:wait_for", data.get("wait_for"))
        else:
            board.set("perception:object_ref", data["object_ref"])
            board.set("perception:store_key", data["store_key"])
            # Force a fresh keypoint: re-running a skill must re-locate the
            # object, otherwise a stale point would defeat object-centric
            # re-targeting.
            board.delete(data["store_key"])
        board.chooser_flags[self.flag_index(kind)] = True

    def clear(self, board: Blackboard) -> None:
        """Drop installed task data and reset all subtrees (task boundary)."""
        for suffix in ("goal_translation", "goal_orientation", "duration", "error"):
            board.delete(f"move:{suffix}")
        for key in ("gripper:on", "gripper:wait_for", "perception:object_ref",
                    "perception:store_key", "last_failure"):
            board.delete(key)
        self._slot_data.clear()
        for tree in self._trees.values():
            tree.reset()

    # -- conditions ----------------------------------------------------

    def _post(self, kind: BaseSkillKind, board: Blackboard) -> bool:
        if kind is BaseSkillKind.MOVE:
            if "move:goal_translation" not in board:
                return False
            if board.get("segment_active"):
                # mid-trajectory the tip may already be inside tolerance;
                # completion means the controller finished, which lands
                # exactly on the goal
                return False
            dist = float(
                np.linalg.norm(board.get("tip_translation") - board.get("move:goal_translation"))
            )
            angle = quat_angle_deg(
                board.get("tip_orientation"), board.get("move:goal_orientation")
            )
            return dist < MOVE_TOLERANCE_M and angle < MOVE_TOLERANCE_DEG
        if kind is BaseSkillKind.GRIPPER:
            if "gripper:on" not in board:
                return False
            if board.get("gripper_on") != board.get("gripper:on"):
                return False
            wait_for = board.get("gripper:wait_for")
            return wait_for is None or board.get("latch") == wait_for
        if "perception:store_key" not in board:
            return False
        return board.get("perception:store_key") in board

    def _pre(self, kind: BaseSkillKind, board: Blackboard) -> bool:
        if kind is BaseSkillKind.MOVE:
            if "move:error" in board:
                board.set("last_failure", board.get("move:error"))
                return False
            if "move:goal_translation" not in board:
                board.set("last_failure", "no move goal installed")
                return False
            if not board.get("workspace").contains(board.get("move:goal_translation")):
                board.set("last_failure", "move goal outside workspace bounds")
                return False
            return True
        if kind is BaseSkillKind.GRIPPER:
            return True
        color = board.get("perception:object_ref") if "perception:object_ref" in board else None
        if color not in board.get("brick_colors"):
            board.set("last_failure", f"unknown object {color!r}")
            return False
        return True

    # -- controllers ---------------------------------------------------

    def _log(self, kind: BaseSkillKind) -> None:
        self.invocation_log.append((kind.value, copy.deepcopy(self._slot_data.get(kind, {}))))

    def _control(self, kind: BaseSkillKind, board: Blackboard, state: dict) -> TickStatus:
        if kind is BaseSkillKind.MOVE:
            if "started" not in state:
                state["started"] = True
                self._log(kind)
                goal = Pose(board.get("move:goal_translation"), board.get("move:goal_orientation"))
                self.world.set_segment(goal, board.get("move:duration"))
            return TickStatus.RUNNING
        if kind is BaseSkillKind.GRIPPER:
            if "started" not in state:
                state["started"] = True
                self._log(kind)
                self.world.robot.gripper_on = board.get("gripper:on")
                state["deadline"] = self.world.t + self.gripper_timeout
            wait_for = board.get("gripper:wait_for")
            if wait_for is not None and self.world.t >= state["deadline"]:
                board.set("last_failure", f"gripper wait for {wait_for} timed out")
                return TickStatus.FAILURE
            return TickStatus.RUNNING
        if "started" not in state:
            state["started"] = True
            self._log(kind)
        color = board.get("perception:object_ref")
        pose = Pose(
            board.get(brick_key(color, "translation")), board.get(brick_key(color, "orientation"))
        )
        world_pts = pose.transform_points(board.get(brick_key(color, "affordances")))
        keypoint = world_pts[int(np.argmax(world_pts[:, 2]))].copy()
        board.set(board.get("perception:store_key"), keypoint)
        return TickStatus.RUNNING

    def _build(self, kind: BaseSkillKind) -> bt.Node:
        name = kind.value.lower()
        post = bt.Condition(lambda board, k=kind: self._post(k, board), name=f"{name}:post")
        pre = bt.Condition(lambda board, k=kind: self._pre(k, board), name=f"{name}:pre")
        ctrl = bt.Action(
            lambda board, state, k=kind: self._control(k, board, state), name=f"{name}:controller"
        )
        return bt.Fallback(
            [post, bt.Sequence([pre, ctrl], name=f"{name}:attempt")], name=name
        )


# ----------------------------------------------------------------------
# custom skill

@dataclass
class CustomSkillState:
    step: int = 0
    task: list = field(default_factory=list)
    data: list = field(default_factory=list)

    def done(self) -> bool:
        return self.step >= len(self.task)


def custom_skill_tick(
    state: CustomSkillState,
    board: Blackboard,
    setup: Callable[[BaseSkillKind, dict], None],
) -> bool:
    """One tick of the custom-skill leaf.

    Clears every chooser flag, then either reports completion, or consumes
    the current step: known base-skill kinds are set up (flag raised for the
    next cycle) and the tick reports True; anything else reports False.
    """
    board.clear_chooser_flags()
    if state.step >= len(state.task):
        return True
    task = state.task[state.step]
    data = state.data[state.step]
    state.step += 1
    if isinstance(task, BaseSkillKind):
        setup(task, data)
        return True
    return False


class CustomSkillNode(bt.Node):
    kind = bt.NodeKind.CUSTOM_SKILL

    def __init__(self, bank: BaseSkillBank, name: str = "custom-skill"):
        super().__init__(name)
        self.bank = bank
        self.state = CustomSkillState()

    def configure(self, steps: list[TaskStep]) -> None:
        self.state = CustomSkillState(
            step=0, task=[s.kind for s in steps], data=[copy.deepcopy(s.data) for s in steps]
        )

    def configure_raw(self, task: list, data: list) -> None:
        if len(task) != len(data):
            raise ValueError("task and data lists must have the same length")
        self.state = CustomSkillState(step=0, task=list(task), data=list(data))

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        self._board_for_setup = board
        ok = custom_skill_tick(self.state, board, self._setup)
        return self._done(TickStatus.SUCCESS if ok else TickStatus.FAILURE)

    def _setup(self, kind: BaseSkillKind, data: dict) -> None:
        self.bank.setup(kind, data, self._board_for_setup)

    def _reset_local(self):
        self.state.step = 0


# ----------------------------------------------------------------------
# derived pick-and-place skills

def _cm(values) -> list[float]:
    return [float(v) / 100.0 for v in np.asarray(values, dtype=float).reshape(3)]


def compile_pickup_brick(color: str, offset: float = 3.0) -> list[TaskStep]:
    """Approach above the object's top affordance, descend, grasp, move up.

    ``offset`` is the vertical approach clearance in centimeters.
    """
    if offset <= 0:
        raise SkillCompileError(f"pickup offset must be > 0 cm, got {offset}")
    lift = [0.0, 0.0, float(offset) / 100.0]
    return [
        TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": color, "store_key": color}),
        TaskStep(BaseSkillKind.MOVE, {"object_ref": color, "offset": lift}),
        TaskStep(BaseSkillKind.MOVE, {"object_ref": color, "offset": [0.0, 0.0, 0.0]}),
        TaskStep(BaseSkillKind.GRIPPER, {"on": True, "wait_for": "Locked"}),
        TaskStep(BaseSkillKind.MOVE, {"object_ref": color, "offset": lift}),
    ]


def compile_drop_brick(orientation=(0, 0, 0), offset: float = 3.0) -> list[TaskStep]:
    """Place at the current (x, y): descend to ``offset`` cm above the table
    with the given absolute orientation, release, move back up."""
    if offset <= 0:
        raise SkillCompileError(f"drop offset must be > 0 cm, got {offset}")
    q = euler_xyz_deg_to_quat(orientation).tolist()
    z = float(offset) / 100.0
    return [
        TaskStep(
            BaseSkillKind.MOVE,
            {"anchor": "tip", "offset": [0.0, 0.0, 0.0], "z_abs": z, "goal_orientation": q},
        ),
        TaskStep(BaseSkillKind.GRIPPER, {"on": False, "wait_for": "Free"}),
        TaskStep(
            BaseSkillKind.MOVE, {"anchor": "tip", "offset": [0.0, 0.0, z], "goal_orientation": q}
        ),
    ]


def drop_requires_holding(world: World) -> tuple[bool, str]:
    if world.robot.latch is LatchState.LOCKED:
        return True, ""
    return False, "nothing is held; drop_brick requires a locked grasp"


def compile_move_hand(orientation=(0, 0, 0), translation=(0, 0, 0)) -> list[TaskStep]:
    """Relative translation (cm) of the tip with an absolute orientation."""
    q = euler_xyz_deg_to_quat(orientation).tolist()
    return [
        TaskStep(
            BaseSkillKind.MOVE,
            {"anchor": "tip", "offset": _cm(translation), "goal_orientation": q},
        )
    ]


def compile_move_by_object(color: str, translation=(0, 0, 0)) -> list[TaskStep]:
    """Move the tip to the object's top affordance plus a world offset (cm)."""
    return [
        TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": color, "store_key": color}),
        TaskStep(BaseSkillKind.MOVE, {"object_ref": color, "offset": _cm(translation)}),
    ]


@dataclass(frozen=True)
class CommandSkill:
    """A parameterized built-in skill reachable from the command language."""

    name: str
    compile: Callable[..., list[TaskStep]]
    precondition: Optional[Callable[[World], tuple[bool, str]]] = None


COMMAND_SKILLS: dict[str, CommandSkill] = {
    "pickup_brick": CommandSkill("pickup_brick", compile_pickup_brick),
    "drop_brick": CommandSkill("drop_brick", compile_drop_brick, drop_requires_holding),
    "move_hand": CommandSkill("move_hand", compile_move_hand),
    "move_by_object": CommandSkill("move_by_object", compile_move_by_object),
}

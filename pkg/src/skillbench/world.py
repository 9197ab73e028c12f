"""Deterministic kinematic pick-and-place world.

A free end effector tracks minimum-jerk Cartesian segments over a table of
bricks. Grasping is a vacuum latch driven by tip-to-surface distance and
dwell timers; while latched, the held brick rides on a fixed tip-to-object
transform. There is no dynamics: a released brick simply stays where the
latch let go of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import Pose, TrajectorySegment, segment_pose

MAX_STEP_DT = 0.05

# Point-to-point duration heuristic: cruise speed in m/s and a floor that
# keeps rotation-only moves from degenerating to zero time.
CRUISE_SPEED = 0.25
MIN_SEGMENT_DURATION = 0.5


class LatchState(str, Enum):
    FREE = "Free"
    ARMING = "Arming"
    LOCKED = "Locked"
    RELEASING = "Releasing"


@dataclass
class LatchParams:
    distance_threshold: float = 0.005
    grasp_time: float = 0.5
    release_time: float = 0.5


# Dwell timers compare an accumulated clock against a duration; without a
# guard, sums like 0.7 - 0.2 land one ulp short of 0.5 and the latch would
# fire a step late.
_TIMER_EPS = 1e-9


def latch_step(
    state: LatchState,
    since: float,
    gripper_on: bool,
    distance: float,
    now: float,
    params: LatchParams,
) -> tuple[LatchState, float, bool, bool]:
    """One transition of the vacuum-latch state machine.

    Returns (state, since, locked_now, released_now). ``since`` is the start
    time of the Arming/Releasing dwell; it is meaningless in Free/Locked.
    Arming restarts from scratch whenever the distance re-crosses the
    threshold or the gripper switches off.
    """
    if state is LatchState.FREE:
        if gripper_on and distance < params.distance_threshold:
            return LatchState.ARMING, now, False, False
        return LatchState.FREE, since, False, False
    if state is LatchState.ARMING:
        if not gripper_on:
            return LatchState.FREE, since, False, False
        if distance >= params.distance_threshold:
            return LatchState.FREE, since, False, False
        if now - since >= params.grasp_time - _TIMER_EPS:
            return LatchState.LOCKED, since, True, False
        return LatchState.ARMING, since, False, False
    if state is LatchState.LOCKED:
        if not gripper_on:
            return LatchState.RELEASING, now, False, False
        return LatchState.LOCKED, since, False, False
    # RELEASING
    if gripper_on:
        return LatchState.LOCKED, since, False, False
    if now - since >= params.release_time - _TIMER_EPS:
        return LatchState.FREE, since, False, True
    return LatchState.RELEASING, since, False, False


@dataclass
class Brick:
    """A manipulable block: pose plus object-frame affordance and mesh points."""

    name: str
    color: str
    size_class: str  # "tall" | "short"
    pose: Pose
    affordances: np.ndarray  # (N, 3) object frame, meters
    mesh: np.ndarray  # (M, 3) object frame, meters

    def __post_init__(self):
        self.affordances = np.asarray(self.affordances, dtype=float).reshape(-1, 3)
        self.mesh = np.asarray(self.mesh, dtype=float).reshape(-1, 3)
        if len(self.affordances) == 0:
            raise ValueError(f"brick {self.name!r} has no affordances")
        if len(self.mesh) == 0:
            raise ValueError(f"brick {self.name!r} has no mesh points")
        if self.size_class not in ("tall", "short"):
            raise ValueError(f"brick {self.name!r}: bad size_class {self.size_class!r}")


@dataclass
class RobotState:
    tip: Pose
    gripper_on: bool = False
    latch: LatchState = LatchState.FREE
    latch_since: float = 0.0
    held: Optional[str] = None
    held_transform: Optional[Pose] = None


def nearest_surface_distance(tip: Pose, brick: Brick) -> float:
    """Euclidean distance from the tip to the nearest brick mesh point."""
    world_pts = brick.pose.transform_points(brick.mesh)
    return float(np.min(np.linalg.norm(world_pts - tip.translation, axis=1)))


def top_affordance(brick: Brick) -> np.ndarray:
    """The affordance point highest above the table in the world frame.

    Ties break toward the lowest list index.
    """
    world_pts = brick.pose.transform_points(brick.affordances)
    return world_pts[int(np.argmax(world_pts[:, 2]))].copy()


@dataclass
class Workspace:
    x: tuple[float, float] = (-0.4, 0.4)
    y: tuple[float, float] = (-0.4, 0.4)
    z: tuple[float, float] = (0.0, 0.6)

    def contains(self, p) -> bool:
        x, y, z = np.asarray(p, dtype=float)
        return (
            self.x[0] <= x <= self.x[1]
            and self.y[0] <= y <= self.y[1]
            and self.z[0] <= z <= self.z[1]
        )


class World:
    """The simulated scene, stepped exclusively by the controller loop."""

    def __init__(
        self,
        bricks: list[Brick],
        robot_tip: Pose,
        robot_name: str = "panda",
        workspace: Optional[Workspace] = None,
        latch_params: Optional[LatchParams] = None,
        dt: float = 0.01,
        cruise_speed: float = CRUISE_SPEED,
        min_segment_duration: float = MIN_SEGMENT_DURATION,
    ):
        names = [b.name for b in bricks]
        if len(set(names)) != len(names):
            raise ValueError("brick names must be unique")
        colors = [b.color for b in bricks]
        if len(set(colors)) != len(colors):
            raise ValueError("brick colors must be unique (commands reference by color)")
        self.t = 0.0
        self.bricks = bricks
        self.robot = RobotState(tip=robot_tip.copy())
        self.robot_name = robot_name
        self.workspace = workspace or Workspace()
        self.latch_params = latch_params or LatchParams()
        self.dt = dt
        self.cruise_speed = cruise_speed
        self.min_segment_duration = min_segment_duration
        self.segment: Optional[TrajectorySegment] = None

    def brick_by_color(self, color: str) -> Optional[Brick]:
        for b in self.bricks:
            if b.color == color:
                return b
        return None

    def brick_by_name(self, name: str) -> Optional[Brick]:
        for b in self.bricks:
            if b.name == name:
                return b
        return None

    def set_segment(self, goal: Pose, duration: Optional[float] = None) -> TrajectorySegment:
        """Install a minimum-jerk segment from the current tip to ``goal``."""
        if duration is None:
            dist = float(np.linalg.norm(goal.translation - self.robot.tip.translation))
            duration = max(self.min_segment_duration, dist / self.cruise_speed)
        self.segment = TrajectorySegment(
            start=self.robot.tip.copy(), goal=goal.copy(), duration=duration, t0=self.t
        )
        return self.segment

    def cancel_segment(self) -> None:
        self.segment = None

    def nearest_brick(self) -> tuple[Optional[Brick], float]:
        best, best_d = None, float("inf")
        for b in self.bricks:
            d = nearest_surface_distance(self.robot.tip, b)
            if d < best_d:
                best, best_d = b, d
        return best, best_d

    def step(self, dt: Optional[float] = None) -> None:
        """Advance the sim clock, the tip, the latch, and any held brick."""
        dt = self.dt if dt is None else dt
        if dt <= 0.0 or dt > MAX_STEP_DT:
            raise ValueError(f"dt must be in (0, {MAX_STEP_DT}], got {dt}")
        self.t += dt

        if self.segment is not None:
            if self.t >= self.segment.end_time:
                self.robot.tip = self.segment.goal.copy()
                self.segment = None
            else:
                self.robot.tip = segment_pose(self.segment, self.t)

        robot = self.robot
        near_brick, near_dist = self.nearest_brick()
        state, since, locked_now, released_now = latch_step(
            robot.latch, robot.latch_since, robot.gripper_on, near_dist, self.t, self.latch_params
        )
        robot.latch, robot.latch_since = state, since
        if locked_now and near_brick is not None:
            robot.held = near_brick.name
            robot.held_transform = robot.tip.inverse().compose(near_brick.pose)
        if released_now:
            robot.held = None
            robot.held_transform = None

        if robot.held is not None and robot.held_transform is not None:
            held = self.brick_by_name(robot.held)
            if held is not None:
                held.pose = robot.tip.compose(robot.held_transform)

    def observe(self) -> list[dict]:
        """One state map per entity, suitable for knowledge-graph insertion."""
        records = [
            {
                "entity": "robot",
                "name": self.robot_name,
                "tip_translation": self.robot.tip.translation.tolist(),
                "tip_orientation": self.robot.tip.orientation.tolist(),
                "gripper_on": self.robot.gripper_on,
                "latch": self.robot.latch.value,
                "held": self.robot.held or "",
            }
        ]
        for b in self.bricks:
            records.append(
                {
                    "entity": "brick",
                    "name": b.name,
                    "color": b.color,
                    "size_class": b.size_class,
                    "translation": b.pose.translation.tolist(),
                    "orientation": b.pose.orientation.tolist(),
                }
            )
        return records


@dataclass
class BoxGeometry:
    """Axis-aligned box half-extents with face-center affordances and a
    corner + face-center surface mesh."""

    half_extents: tuple[float, float, float]

    def affordances(self) -> np.ndarray:
        hx, hy, hz = self.half_extents
        return np.array(
            [
                [0.0, 0.0, hz],
                [0.0, 0.0, -hz],
                [hx, 0.0, 0.0],
                [-hx, 0.0, 0.0],
                [0.0, hy, 0.0],
                [0.0, -hy, 0.0],
            ]
        )

    def mesh(self) -> np.ndarray:
        hx, hy, hz = self.half_extents
        corners = np.array(
            [[sx * hx, sy * hy, sz * hz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        )
        return np.vstack([corners, self.affordances()])


TALL_GEOMETRY = BoxGeometry((0.01, 0.01, 0.05))  # 2 x 2 x 10 cm
SHORT_GEOMETRY = BoxGeometry((0.01, 0.01, 0.025))  # 2 x 2 x 5 cm

geometry_for_class = {"tall": TALL_GEOMETRY, "short": SHORT_GEOMETRY}.get

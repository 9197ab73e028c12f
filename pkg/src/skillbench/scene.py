"""Scene configuration: the default six-brick table and the YAML file format.

The file schema is documented in README.md. Every validation error names the
offending field path; YAML syntax errors keep the parser's line/column mark.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .geometry import IDENTITY_QUAT, Pose
from .world import (
    Brick,
    LatchParams,
    Workspace,
    World,
    geometry_for_class,
)


class SceneError(ValueError):
    """Scene file rejected; the message carries the field path or line."""


@dataclass
class ControllerConfig:
    tick_rate: float = 20.0
    substeps: int = 2
    observation_rate: float = 5.0
    gripper_timeout: float = 5.0


@dataclass
class BrickSpec:
    name: str
    color: str
    size_class: str
    translation: list
    orientation: list = field(default_factory=lambda: list(IDENTITY_QUAT))
    affordances: list | None = None
    mesh: list | None = None

    def build(self) -> Brick:
        geom = geometry_for_class(self.size_class)
        if geom is None and (self.affordances is None or self.mesh is None):
            raise SceneError(
                f"brick {self.name!r}: unknown size_class {self.size_class!r} "
                "and no explicit affordances/mesh"
            )
        affordances = self.affordances if self.affordances is not None else geom.affordances()
        mesh = self.mesh if self.mesh is not None else geom.mesh()
        return Brick(
            name=self.name,
            color=self.color,
            size_class=self.size_class,
            pose=Pose(np.asarray(self.translation, dtype=float), self.orientation),
            affordances=np.asarray(affordances, dtype=float),
            mesh=np.asarray(mesh, dtype=float),
        )


@dataclass
class MotionConfig:
    cruise_speed: float = 0.25  # m/s for the default segment-duration heuristic
    min_segment_duration: float = 0.5


@dataclass
class Scene:
    bricks: list[BrickSpec]
    robot_name: str = "panda"
    robot_tip_translation: list = field(default_factory=lambda: [0.0, 0.0, 0.30])
    robot_tip_orientation: list = field(default_factory=lambda: list(IDENTITY_QUAT))
    workspace: Workspace = field(default_factory=Workspace)
    latch: LatchParams = field(default_factory=LatchParams)
    dt: float = 0.01
    motion: MotionConfig = field(default_factory=MotionConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)

    def build_world(self) -> World:
        return World(
            bricks=[spec.build() for spec in self.bricks],
            robot_tip=Pose(self.robot_tip_translation, self.robot_tip_orientation),
            robot_name=self.robot_name,
            workspace=self.workspace,
            latch_params=self.latch,
            dt=self.dt,
            cruise_speed=self.motion.cruise_speed,
            min_segment_duration=self.motion.min_segment_duration,
        )


def default_scene() -> Scene:
    """Six bricks in two rows along y: tall row at x=-0.10, short at x=+0.10.

    Every brick has its own color so commands can reference it unambiguously.
    Centroids sit at half-height so each brick rests on the table plane.
    """
    rows_y = (-0.12, 0.0, 0.12)
    bricks = []
    for (color, y) in zip(("red", "green", "blue"), rows_y):
        bricks.append(
            BrickSpec(
                name=f"brick_{color}",
                color=color,
                size_class="tall",
                translation=[-0.10, y, 0.05],
            )
        )
    for (color, y) in zip(("yellow", "orange", "purple"), rows_y):
        bricks.append(
            BrickSpec(
                name=f"brick_{color}",
                color=color,
                size_class="short",
                translation=[0.10, y, 0.025],
            )
        )
    return Scene(bricks=bricks)


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise SceneError(f"{path}: missing required field {key!r}")
    return mapping[key]


def _as_vec(value, length: int, path: str) -> list:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise SceneError(f"{path}: expected a list of {length} numbers")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise SceneError(f"{path}: expected a list of {length} numbers") from None


def _as_range(value, path: str) -> tuple[float, float]:
    lo, hi = _as_vec(value, 2, path)
    if lo >= hi:
        raise SceneError(f"{path}: range must be [lo, hi] with lo < hi")
    return (lo, hi)


def _as_number(value, path: str, positive: bool = False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SceneError(f"{path}: expected a number")
    if positive and value <= 0:
        raise SceneError(f"{path}: must be > 0")
    return float(value)


def load_scene(path: str) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_scene(text)


def parse_scene(text: str) -> Scene:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SceneError(f"scene file is not valid YAML{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SceneError("scene: top level must be a mapping")

    scene = default_scene()

    if "table" in raw:
        table = raw["table"]
        if not isinstance(table, dict):
            raise SceneError("table: expected a mapping")
        ws = Workspace()
        if "x" in table:
            ws.x = _as_range(table["x"], "table.x")
        if "y" in table:
            ws.y = _as_range(table["y"], "table.y")
        if "z" in table:
            ws.z = _as_range(table["z"], "table.z")
        scene.workspace = ws

    if "robot" in raw:
        robot = raw["robot"]
        if not isinstance(robot, dict):
            raise SceneError("robot: expected a mapping")
        if "name" in robot:
            scene.robot_name = str(robot["name"])
        if "tip_translation" in robot:
            scene.robot_tip_translation = _as_vec(
                robot["tip_translation"], 3, "robot.tip_translation"
            )
        if "tip_orientation" in robot:
            scene.robot_tip_orientation = _as_vec(
                robot["tip_orientation"], 4, "robot.tip_orientation"
            )

    if "latch" in raw:
        latch = raw["latch"]
        if not isinstance(latch, dict):
            raise SceneError("latch: expected a mapping")
        params = LatchParams()
        if "distance_threshold" in latch:
            params.distance_threshold = _as_number(
                latch["distance_threshold"], "latch.distance_threshold", positive=True
            )
        if "grasp_time" in latch:
            params.grasp_time = _as_number(latch["grasp_time"], "latch.grasp_time", positive=True)
        if "release_time" in latch:
            params.release_time = _as_number(
                latch["release_time"], "latch.release_time", positive=True
            )
        scene.latch = params

    if "dt" in raw:
        scene.dt = _as_number(raw["dt"], "dt", positive=True)

    if "motion" in raw:
        motion = raw["motion"]
        if not isinstance(motion, dict):
            raise SceneError("motion: expected a mapping")
        cfg = MotionConfig()
        if "cruise_speed" in motion:
            cfg.cruise_speed = _as_number(motion["cruise_speed"], "motion.cruise_speed", positive=True)
        if "min_segment_duration" in motion:
            cfg.min_segment_duration = _as_number(
                motion["min_segment_duration"], "motion.min_segment_duration", positive=True
            )
        scene.motion = cfg

    if "controller" in raw:
        ctrl = raw["controller"]
        if not isinstance(ctrl, dict):
            raise SceneError("controller: expected a mapping")
        cfg = ControllerConfig()
        if "tick_rate" in ctrl:
            cfg.tick_rate = _as_number(ctrl["tick_rate"], "controller.tick_rate", positive=True)
        if "substeps" in ctrl:
            substeps = ctrl["substeps"]
            if not isinstance(substeps, int) or substeps < 1:
                raise SceneError("controller.substeps: expected an integer >= 1")
            cfg.substeps = substeps
        if "observation_rate" in ctrl:
            cfg.observation_rate = _as_number(
                ctrl["observation_rate"], "controller.observation_rate", positive=True
            )
        if "gripper_timeout" in ctrl:
            cfg.gripper_timeout = _as_number(
                ctrl["gripper_timeout"], "controller.gripper_timeout", positive=True
            )
        scene.controller = cfg

    if "bricks" in raw:
        bricks_raw = raw["bricks"]
        if not isinstance(bricks_raw, list) or not bricks_raw:
            raise SceneError("bricks: expected a non-empty list")
        specs = []
        for i, entry in enumerate(bricks_raw):
            path = f"bricks[{i}]"
            if not isinstance(entry, dict):
                raise SceneError(f"{path}: expected a mapping")
            spec = BrickSpec(
                name=str(_require(entry, "name", path)),
                color=str(_require(entry, "color", path)),
                size_class=str(_require(entry, "size_class", path)),
                translation=_as_vec(_require(entry, "translation", path), 3, f"{path}.translation"),
            )
            if "orientation" in entry:
                spec.orientation = _as_vec(entry["orientation"], 4, f"{path}.orientation")
            if "affordances" in entry:
                spec.affordances = [
                    _as_vec(p, 3, f"{path}.affordances[{j}]")
                    for j, p in enumerate(entry["affordances"])
                ]
            if "mesh" in entry:
                spec.mesh = [
                    _as_vec(p, 3, f"{path}.mesh[{j}]") for j, p in enumerate(entry["mesh"])
                ]
            specs.append(spec)
        scene.bricks = specs

    return scene

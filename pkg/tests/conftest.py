import numpy as np
import pytest

from skillbench.bt import Blackboard, TickStatus
from skillbench.scene import ControllerConfig, default_scene
from skillbench.skills import (
    KIND_ORDER,
    BaseSkillBank,
    init_board,
    mirror_world,
)


@pytest.fixture
def world():
    return default_scene().build_world()


@pytest.fixture
def workbench():
    from skillbench.session import Workbench

    return Workbench()


def execute_steps_directly(world, steps, config: ControllerConfig | None = None):
    """Sequential oracle: run steps one after another through bare base-skill
    subtrees, bypassing the xor/chooser/custom routing entirely.

    Returns (invocation_log, status) and leaves the world at its end state.
    """
    config = config or ControllerConfig()
    board = Blackboard(len(KIND_ORDER))
    init_board(board, world)
    bank = BaseSkillBank(world, config.gripper_timeout)
    status = TickStatus.SUCCESS
    for step in steps:
        bank.setup(step.kind, step.data, board)
        deadline = world.t + 120.0
        while True:
            for _ in range(config.substeps):
                world.step(world.dt)
            mirror_world(board, world)
            status = bank.subtree(step.kind).tick(board)
            if status is not TickStatus.RUNNING:
                break
            assert world.t < deadline, "direct executor wedged"
        if status is TickStatus.FAILURE:
            break
    return bank.invocation_log, status


def world_signature(world) -> np.ndarray:
    """Tip pose plus all brick poses, flattened for exact comparison."""
    parts = [world.robot.tip.translation, world.robot.tip.orientation]
    for brick in world.bricks:
        parts.append(brick.pose.translation)
        parts.append(brick.pose.orientation)
    return np.concatenate(parts)

import numpy as np
import pytest

from skillbench.bt import Blackboard, TickStatus
from skillbench.geometry import Pose, euler_xyz_deg_to_quat, quat_angle_deg
from skillbench.skills import (
    KIND_ORDER,
    BaseSkillBank,
    BaseSkillKind,
    CustomSkillNode,
    CustomSkillState,
    SkillCompileError,
    StepDataError,
    TaskStep,
    collect_object_refs,
    compile_drop_brick,
    compile_move_by_object,
    compile_move_hand,
    compile_pickup_brick,
    custom_skill_tick,
    init_board,
    mirror_world,
    substitute_steps,
)

from conftest import execute_steps_directly


class TestTaskStepValidation:
    def test_move_forms(self):
        TaskStep(BaseSkillKind.MOVE, {"goal_translation": [0, 0, 0.2], "goal_orientation": [0, 0, 0, 1]})
        TaskStep(BaseSkillKind.MOVE, {"object_ref": "red", "offset": [0, 0, 0.03]})
        TaskStep(BaseSkillKind.MOVE, {"anchor": "tip", "offset": [0, 0, 0], "z_abs": 0.03})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.MOVE, {"object_ref": "red"})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.MOVE, {"goal_translation": [0, 0, 0.2], "extra": 1})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.MOVE, {"anchor": "base", "offset": [0, 0, 0]})

    def test_gripper_form(self):
        TaskStep(BaseSkillKind.GRIPPER, {"on": True})
        TaskStep(BaseSkillKind.GRIPPER, {"on": False, "wait_for": "Free"})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.GRIPPER, {"on": True, "wait_for": "Armed"})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.GRIPPER, {"wait_for": "Free"})

    def test_perception_form(self):
        TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "red", "store_key": "red"})
        with pytest.raises(StepDataError):
            TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "red"})


class TestCompilers:
    def test_pickup_decomposition(self):
        steps = compile_pickup_brick("red", offset=3)
        assert [s.kind for s in steps] == [
            BaseSkillKind.PERCEPTION,
            BaseSkillKind.MOVE,
            BaseSkillKind.MOVE,
            BaseSkillKind.GRIPPER,
            BaseSkillKind.MOVE,
        ]
        assert steps[1].data["offset"] == [0, 0, 0.03]
        assert steps[2].data["offset"] == [0, 0, 0]
        assert steps[3].data == {"on": True, "wait_for": "Locked"}
        assert steps[4].data["offset"] == [0, 0, 0.03]

    def test_pickup_zero_offset_rejected(self):
        with pytest.raises(SkillCompileError):
            compile_pickup_brick("red", offset=0)

    def test_pickup_substitution_retargets_everything(self):
        steps = compile_pickup_brick("red", offset=3)
        assert collect_object_refs(steps) == {"red"}
        swapped = substitute_steps(steps, {"red": "green"})
        assert collect_object_refs(swapped) == {"green"}
        assert swapped == compile_pickup_brick("green", offset=3)

    def test_drop_decomposition(self):
        steps = compile_drop_brick(orientation=[0, 0, 0], offset=3)
        assert [s.kind for s in steps] == [
            BaseSkillKind.MOVE,
            BaseSkillKind.GRIPPER,
            BaseSkillKind.MOVE,
        ]
        assert steps[0].data["z_abs"] == 0.03
        assert quat_angle_deg(steps[0].data["goal_orientation"], [0, 0, 0, 1]) < 1e-9
        assert steps[1].data == {"on": False, "wait_for": "Free"}
        assert steps[2].data["offset"] == [0, 0, 0.03]

    def test_move_hand_units(self):
        steps = compile_move_hand(orientation=[0, 0, -90], translation=[0, 20, 0])
        assert len(steps) == 1
        assert steps[0].data["offset"] == [0, 0.2, 0]
        expected_q = euler_xyz_deg_to_quat([0, 0, -90])
        assert quat_angle_deg(steps[0].data["goal_orientation"], expected_q) < 1e-9

    def test_move_by_object(self):
        steps = compile_move_by_object("blue", translation=[0, 0, -5])
        assert steps[0].kind is BaseSkillKind.PERCEPTION
        assert steps[1].data == {"object_ref": "blue", "offset": [0, 0, -0.05]}

    def test_compilation_is_pure(self):
        assert compile_pickup_brick("red", 4) == compile_pickup_brick("red", 4)
        assert compile_drop_brick([0, 10, 0], 2) == compile_drop_brick([0, 10, 0], 2)


class TestCustomSkillTick:
    def setup_method(self):
        self.board = Blackboard(3)
        self.calls = []

    def setup_fn(self, kind, data):
        self.calls.append((kind, data))
        self.board.chooser_flags[KIND_ORDER.index(kind)] = True

    def test_completed_returns_true_without_flags(self):
        state = CustomSkillState(step=2, task=[BaseSkillKind.MOVE] * 2, data=[{}] * 2)
        self.board.chooser_flags[1] = True
        assert custom_skill_tick(state, self.board, self.setup_fn) is True
        assert self.board.chooser_flags == [False, False, False]
        assert self.calls == []

    def test_three_steps_raise_flags_in_order(self):
        steps = [
            TaskStep(BaseSkillKind.MOVE, {"anchor": "tip", "offset": [0, 0, 0]}),
            TaskStep(BaseSkillKind.GRIPPER, {"on": True}),
            TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "red", "store_key": "red"}),
        ]
        state = CustomSkillState(
            step=0, task=[s.kind for s in steps], data=[s.data for s in steps]
        )
        raised = []
        for _ in steps:
            assert custom_skill_tick(state, self.board, self.setup_fn) is True
            raised.append(list(self.board.chooser_flags))
            self.board.clear_chooser_flags()
        assert raised == [
            [True, False, False],
            [False, True, False],
            [False, False, True],
        ]
        assert [kind for kind, _ in self.calls] == list(KIND_ORDER)

    def test_unknown_kind_returns_false(self):
        state = CustomSkillState(step=0, task=["UNKNOWN"], data=[{}])
        assert custom_skill_tick(state, self.board, self.setup_fn) is False
        assert state.step == 1  # the counter advances before the kind check
        assert self.calls == []


class TestBaseSkillBehavior:
    def make(self, world):
        board = Blackboard(3)
        init_board(board, world)
        bank = BaseSkillBank(world)
        return board, bank

    def run_skill(self, world, board, bank, step, max_sim=30.0):
        bank.setup(step.kind, step.data, board)
        subtree = bank.subtree(step.kind)
        deadline = world.t + max_sim
        while True:
            for _ in range(2):
                world.step(0.01)
            mirror_world(board, world)
            status = subtree.tick(board)
            if status is not TickStatus.RUNNING:
                return status
            assert world.t < deadline

    def test_post_satisfied_skips_controller(self, world):
        board, bank = self.make(world)
        goal = TaskStep(
            BaseSkillKind.MOVE,
            {
                "goal_translation": world.robot.tip.translation.tolist(),
                "goal_orientation": world.robot.tip.orientation.tolist(),
            },
        )
        bank.setup(goal.kind, goal.data, board)
        status = bank.subtree(BaseSkillKind.MOVE).tick(board)
        assert status is TickStatus.SUCCESS
        assert bank.invocation_log == []  # the controller never started

    def test_perception_matches_brute_force(self, world):
        board, bank = self.make(world)
        step = TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "red", "store_key": "red"})
        assert self.run_skill(world, board, bank, step) is TickStatus.SUCCESS
        brick = world.brick_by_color("red")
        world_pts = brick.pose.transform_points(brick.affordances)
        expected = world_pts[int(np.argmax(world_pts[:, 2]))]
        assert np.allclose(board.get("red"), expected)

    def test_perception_unknown_object_fails(self, world):
        board, bank = self.make(world)
        step = TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "cyan", "store_key": "cyan"})
        assert self.run_skill(world, board, bank, step) is TickStatus.FAILURE
        assert "cyan" in board.get("last_failure")

    def test_move_outside_workspace_fails(self, world):
        board, bank = self.make(world)
        step = TaskStep(
            BaseSkillKind.MOVE,
            {"goal_translation": [5.0, 0, 0.2], "goal_orientation": [0, 0, 0, 1]},
        )
        assert self.run_skill(world, board, bank, step) is TickStatus.FAILURE
        assert "workspace" in board.get("last_failure")

    def test_move_reaches_goal_within_tolerance(self, world):
        board, bank = self.make(world)
        goal = [0.1, -0.1, 0.25]
        step = TaskStep(
            BaseSkillKind.MOVE, {"goal_translation": goal, "goal_orientation": [0, 0, 0, 1]}
        )
        assert self.run_skill(world, board, bank, step) is TickStatus.SUCCESS
        assert np.linalg.norm(world.robot.tip.translation - goal) < 1e-3

    def test_move_object_relative_requires_keypoint(self, world):
        board, bank = self.make(world)
        step = TaskStep(BaseSkillKind.MOVE, {"object_ref": "red", "offset": [0, 0, 0.05]})
        assert self.run_skill(world, board, bank, step) is TickStatus.FAILURE
        assert "keypoint" in board.get("last_failure")

    def test_gripper_wait_timeout(self, world):
        board, bank = self.make(world)
        # tip far from every brick: the latch can never lock
        step = TaskStep(BaseSkillKind.GRIPPER, {"on": True, "wait_for": "Locked"})
        assert self.run_skill(world, board, bank, step) is TickStatus.FAILURE
        assert "timed out" in board.get("last_failure")

    def test_gripper_without_wait(self, world):
        board, bank = self.make(world)
        step = TaskStep(BaseSkillKind.GRIPPER, {"on": True})
        assert self.run_skill(world, board, bank, step) is TickStatus.SUCCESS
        assert world.robot.gripper_on is True

    def test_perception_rerun_recomputes(self, world):
        board, bank = self.make(world)
        step = TaskStep(BaseSkillKind.PERCEPTION, {"object_ref": "red", "store_key": "red"})
        assert self.run_skill(world, board, bank, step) is TickStatus.SUCCESS
        first = np.array(board.get("red"))
        brick = world.brick_by_color("red")
        brick.pose = Pose(brick.pose.translation + [0.05, 0, 0], brick.pose.orientation)
        assert self.run_skill(world, board, bank, step) is TickStatus.SUCCESS
        second = np.array(board.get("red"))
        assert np.allclose(second - first, [0.05, 0, 0])


class TestDirectExecution:
    def test_pickup_sequence_grasps(self, world):
        steps = compile_pickup_brick("red", offset=3)
        log, status = execute_steps_directly(world, steps)
        assert status is TickStatus.SUCCESS
        assert world.robot.held == "brick_red"
        assert [kind for kind, _ in log] == [s.kind.value for s in steps]

    def test_move_hand_round_trip(self, world):
        start = world.robot.tip.translation.copy()
        steps = compile_move_hand(translation=[0, 20, 0]) + compile_move_hand(
            translation=[0, -20, 0]
        )
        _, status = execute_steps_directly(world, steps)
        assert status is TickStatus.SUCCESS
        assert np.linalg.norm(world.robot.tip.translation - start) < 1e-6

"""Acceptance suite: one test per criterion, each printing a pass line with
its runtime against the stated budget. Everything here runs headless."""

import itertools
import random
import time

import numpy as np
import pytest

from skillbench.bt import Blackboard, TickStatus, tick, xor_satisfied
from skillbench.commands import Command, parse, render
from skillbench.geometry import min_jerk_scalar
from skillbench.graph import KnowledgeGraph
from skillbench.scene import default_scene
from skillbench.session import Workbench
from skillbench.skills import BaseSkillKind, TaskStep
from skillbench.world import LatchParams

from conftest import execute_steps_directly, world_signature
from test_bt import CountingAction, _collect_actions, const_condition
from test_world import drive_latch, reference_latch


class _Budget:
    def __init__(self, label, seconds):
        self.label = label
        self.seconds = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        if exc_type is None:
            if elapsed >= self.seconds:
                print(f"ACCEPTANCE FAIL: {self.label} overran budget "
                      f"({elapsed:.2f}s >= {self.seconds:.0f}s)")
                raise AssertionError(f"{self.label}: runtime {elapsed:.2f}s "
                                     f"exceeds {self.seconds:.0f}s budget")
            print(f"ACCEPTANCE PASS: {self.label} ({elapsed:.2f}s < {self.seconds:.0f}s)")
        else:
            print(f"ACCEPTANCE FAIL: {self.label} ({elapsed:.2f}s)")
        return False


def test_min_jerk_suite():
    with _Budget("min-jerk time scaling", 1.0):
        s = min_jerk_scalar
        assert abs(s(0.0) - 0.0) < 1e-12
        assert abs(s(1.0) - 1.0) < 1e-12
        assert abs(s(0.5) - 0.5) < 1e-12

        h = 1e-4
        grid = np.linspace(h, 1 - h, 2001)
        peak_vel = max((s(t + h) - s(t - h)) / (2 * h) for t in grid)
        peak_acc = max(abs(s(t + h) - 2 * s(t) + s(t - h)) / h**2 for t in grid)
        vel0 = (-3 * s(0.0) + 4 * s(h) - s(2 * h)) / (2 * h)
        vel1 = (3 * s(1.0) - 4 * s(1 - h) + s(1 - 2 * h)) / (2 * h)
        acc0 = (2 * s(0.0) - 5 * s(h) + 4 * s(2 * h) - s(3 * h)) / h**2
        acc1 = (2 * s(1.0) - 5 * s(1 - h) + 4 * s(1 - 2 * h) - s(1 - 3 * h)) / h**2
        assert abs(vel0) < 1e-6 * peak_vel and abs(vel1) < 1e-6 * peak_vel
        assert abs(acc0) < 1e-6 * peak_acc and abs(acc1) < 1e-6 * peak_acc

        values = [s(t) for t in np.linspace(0.0, 1.0, 1001)]
        assert all(b > a for a, b in zip(values, values[1:]))


def test_latch_state_machine_oracle():
    with _Budget("latch machine vs reference automaton", 5.0):
        params = LatchParams(distance_threshold=0.005, grasp_time=0.5, release_time=0.5)
        alphabet = [(g, b) for g in (False, True) for b in (False, True)]
        checked = 0
        for length in range(1, 9):
            for events in itertools.product(alphabet, repeat=length):
                assert drive_latch(events, 0.1, params) == reference_latch(
                    events, 0.1, params
                ), f"diverged on {events}"
                checked += 1
        assert checked == sum(4**n for n in range(1, 9))


def test_bt_semantics_suite():
    with _Budget("behaviour-tree semantics", 10.0):
        rng = random.Random(99)

        def random_tree(depth):
            if depth == 0 or rng.random() < 0.3:
                if rng.random() < 0.5:
                    return const_condition(rng.random() < 0.5)
                return CountingAction(rng.choice(list(TickStatus)))
            kids = [random_tree(depth - 1) for _ in range(rng.randint(1, 4))]
            from skillbench.bt import Fallback, Sequence

            return Sequence(kids) if rng.random() < 0.5 else Fallback(kids)

        for _ in range(300):
            root = random_tree(rng.randint(1, 6))
            board = Blackboard(0)
            trace1, trace2 = [], []
            status1 = tick(root, board, trace1)
            counts1 = [a.calls for a in _collect_actions(root)]
            status2 = tick(root, board, trace2)
            counts2 = [a.calls for a in _collect_actions(root)]
            assert status1 is status2, "determinism violated"
            assert trace1 == trace2, "selection changed with identical inputs"
            assert counts2 == [2 * c for c in counts1], "short-circuit set changed"
            assert all(c <= 1 for c in counts1), "node ticked twice in one traversal"

        for length in range(1, 11):
            for bits in itertools.product([False, True], repeat=length):
                assert xor_satisfied(bits) == (sum(bits) == 1)


def _random_step_lists(count, rng):
    colors = [spec.color for spec in default_scene().bricks]
    lists = []
    for _ in range(count):
        steps = []
        for _ in range(rng.integers(1, 11)):
            kind = rng.integers(0, 3)
            if kind == 0:
                goal = [
                    float(rng.uniform(-0.3, 0.3)),
                    float(rng.uniform(-0.3, 0.3)),
                    float(rng.uniform(0.15, 0.5)),
                ]
                steps.append(
                    TaskStep(
                        BaseSkillKind.MOVE,
                        {
                            "goal_translation": goal,
                            "goal_orientation": [0.0, 0.0, 0.0, 1.0],
                            "duration": 0.25,
                        },
                    )
                )
            elif kind == 1:
                steps.append(
                    TaskStep(BaseSkillKind.GRIPPER, {"on": bool(rng.integers(0, 2))})
                )
            else:
                color = colors[int(rng.integers(0, len(colors)))]
                steps.append(
                    TaskStep(
                        BaseSkillKind.PERCEPTION, {"object_ref": color, "store_key": color}
                    )
                )
        lists.append(steps)
    return lists


def test_algorithm_equivalence_main_bt_vs_direct():
    with _Budget("custom-skill routing vs direct sequential execution", 60.0):
        rng = np.random.default_rng(20240712)
        for steps in _random_step_lists(200, rng):
            wb = Workbench()
            task_id = wb.kg.insert_tasked(
                wb.agent_id, "scripted()", "scripted", None, {}, wb.controller.now_ms()
            )
            wb.controller.activate(task_id, steps)
            wb.run_until_idle(max_sim_seconds=60.0)
            assert wb.outcomes[-1].status == "Succeeded"
            bt_signature = world_signature(wb.world)
            bt_order = [kind for kind, _ in wb.controller.bank.invocation_log]

            direct_world = default_scene().build_world()
            direct_log, direct_status = execute_steps_directly(direct_world, steps)
            assert direct_status is TickStatus.SUCCESS
            direct_signature = world_signature(direct_world)
            direct_order = [kind for kind, _ in direct_log]

            assert bt_order == direct_order, "base-skill invocation order diverged"
            assert np.allclose(bt_signature, direct_signature, atol=1e-9), (
                "world end-state diverged"
            )


def test_brick_row_alignment_with_saved_skill():
    with _Budget("brick-row alignment via saved skill", 60.0):
        wb = Workbench()

        def run(text):
            response = wb.submit(text)
            assert "event_id" in response or "result" in response, response
            if "event_id" in response:
                wb.run_until_idle()

        # teach on the red tall brick, against the yellow short brick's row
        run("pickup_brick('red', offset=3)")
        run("move_by_object('yellow', translation=[10, 0, 15])")
        run("drop_brick(orientation=[0,0,0], offset=10)")
        run("save_last_n_tasks('AlignBrick', 3)")
        # retarget to the other two tall bricks
        run("do_skill_from_library('AlignBrick', {'red': 'green', 'yellow': 'orange'})")
        run("do_skill_from_library('AlignBrick', {'red': 'blue', 'yellow': 'purple'})")

        assert len(wb.outcomes) == 5
        assert all(outcome.status == "Succeeded" for outcome in wb.outcomes)

        short_row_x = wb.world.brick_by_color("yellow").pose.translation[0]
        for color in ("red", "green", "blue"):
            x = wb.world.brick_by_color(color).pose.translation[0]
            assert abs(x - (short_row_x + 0.10)) < 0.005, (
                f"{color} brick at x={x:.4f}, want {short_row_x + 0.10:.4f} +- 5 mm"
            )
        # the bricks were really picked and placed, not teleported
        assert wb.world.robot.held is None


def test_knowledge_graph_properties():
    with _Budget("knowledge-graph invariants over 1000 inserts", 10.0):
        rng = random.Random(4242)
        kg = KnowledgeGraph()
        agent = kg.add_agent("panda", [0, 0, 0], [0, 0, 0, 1])
        subjects = [agent] + [
            kg.add_object(f"b{i}", f"c{i}", [0, 0, 0], [[0, 0, 0.05]], [[0, 0, 0.05]])
            for i in range(5)
        ]
        tasked_log = []
        ts = 0
        for i in range(1000):
            ts += rng.randint(0, 3)
            if rng.random() < 0.4:
                tasked_log.append(kg.insert_tasked(agent, f"cmd{i}()", "skill", None, {}, ts))
            else:
                kg.insert_observed(rng.choice(subjects), {"i": i}, ts)

        for n in (0, 1, 7, 100, 2000):
            got = [r.event_id for r in kg.last_n_tasked(n)]
            assert got == tasked_log[len(tasked_log) - min(n, len(tasked_log)):]

        for subject in subjects:
            chain = kg.observations_of(subject)
            stamps = [r.ts for r in chain]
            assert stamps == sorted(stamps), "temporal chain out of order"
            latest = kg.latest_observation(subject)
            if chain:
                assert latest.event_id == chain[-1].event_id

        doc = kg.to_document()
        loaded = KnowledgeGraph.from_document(doc)
        assert set(loaded.nodes) == set(kg.nodes)
        for node_id, node in kg.nodes.items():
            other = loaded.nodes[node_id]
            assert (other.label, other.attributes) == (node.label, node.attributes)
        assert [(e.src, e.dst, e.relation) for e in loaded.edges] == [
            (e.src, e.dst, e.relation) for e in kg.edges
        ]
        assert loaded.to_document() == doc


def test_parser_suite_headless():
    with _Budget("command parser round trips", 10.0):
        expected = {
            "pickup_brick('red', offset=3)": Command("pickup_brick", ["red"], {"offset": 3}),
            "drop_brick(orientation=[0,0,0], offset=3)": Command(
                "drop_brick", [], {"orientation": [0, 0, 0], "offset": 3}
            ),
            "move_hand(orientation=[0,0,-90], translation=[0,20,0])": Command(
                "move_hand", [], {"orientation": [0, 0, -90], "translation": [0, 20, 0]}
            ),
            "move_by_object('blue', translation=[0,0,-5])": Command(
                "move_by_object", ["blue"], {"translation": [0, 0, -5]}
            ),
            "save_last_n_tasks('PileBrickOnBrick', 7)": Command(
                "save_last_n_tasks", ["PileBrickOnBrick", 7], {}
            ),
            "do_skill_from_library('TipOverBrick', {'red': 'green'})": Command(
                "do_skill_from_library", ["TipOverBrick", {"red": "green"}], {}
            ),
            "show_last_n_tasks(10)": Command("show_last_n_tasks", [10], {}),
        }
        for text, want in expected.items():
            assert parse(text) == want, text

        rng = random.Random(777)
        names = ["pickup_brick", "move_hand", "do_skill_from_library", "xyz", "a_b_c"]

        def random_value(depth=0):
            choice = rng.random()
            if choice < 0.3:
                return rng.randint(-1000, 1000)
            if choice < 0.5:
                return round(rng.uniform(-100, 100), 6)
            if choice < 0.7:
                return "".join(rng.choice("abcxyz RGB'\\_-") for _ in range(rng.randint(0, 8)))
            if choice < 0.9 and depth < 2:
                return [random_value(depth + 1) for _ in range(rng.randint(0, 4))]
            return {f"k{i}": rng.choice(["red", "green", "blue"]) for i in range(rng.randint(0, 3))}

        for _ in range(1000):
            cmd = Command(
                rng.choice(names),
                [random_value() for _ in range(rng.randint(0, 3))],
                {f"arg{i}": random_value() for i in range(rng.randint(0, 3))},
            )
            assert parse(render(cmd)) == cmd, render(cmd)

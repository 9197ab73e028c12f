"""Behaviour-tree engine: Sequence, Fallback, Condition, Action, the
either-or construct (xor gate + chooser) and a shared blackboard.

Composites are memoryless: every tick re-evaluates children left to right,
so identical tree state and board contents always select the same nodes.
Node-local state lives only on Action nodes (their ``state`` dict) and on
custom leaves that subclass :class:`Node`.
"""

from __future__ import annotations

import itertools
from enum import Enum
from typing import Callable, Optional


class TickStatus(Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    RUNNING = "Running"


class NodeKind(Enum):
    SEQUENCE = "Sequence"
    FALLBACK = "Fallback"
    CONDITION = "Condition"
    ACTION = "Action"
    XOR_GATE = "XorGate"
    CHOOSER = "Chooser"
    CUSTOM_SKILL = "CustomSkill"


class BTError(Exception):
    pass


class StructuralError(BTError):
    """The tree is malformed: cycle, shared node, or wrong arity."""


class ChooserGuardError(BTError):
    """A chooser was ticked with zero or multiple flags set."""


class BlackboardKeyError(BTError, KeyError):
    pass


class Blackboard:
    """Shared key-value store plus one chooser flag per base skill.

    Reading a missing key raises :class:`BlackboardKeyError`; there are no
    implicit defaults.
    """

    def __init__(self, num_chooser_flags: int):
        if num_chooser_flags < 0:
            raise ValueError("num_chooser_flags must be >= 0")
        self.entries: dict = {}
        self.chooser_flags: list[bool] = [False] * num_chooser_flags

    def get(self, key: str):
        try:
            return self.entries[key]
        except KeyError:
            raise BlackboardKeyError(f"blackboard has no key {key!r}") from None

    def set(self, key: str, value) -> None:
        self.entries[key] = value

    def delete(self, key: str) -> None:
        self.entries.pop(key, None)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def clear_chooser_flags(self) -> None:
        for i in range(len(self.chooser_flags)):
            self.chooser_flags[i] = False


def xor_satisfied(flags) -> bool:
    """True iff exactly one flag is set. Empty arrays are malformed."""
    flags = list(flags)
    if not flags:
        raise StructuralError("xor gate requires a non-empty flag array")
    return sum(1 for f in flags if f) == 1


_node_ids = itertools.count(1)


class Node:
    kind: NodeKind

    def __init__(self, name: Optional[str] = None, children: Optional[list["Node"]] = None):
        self.id = next(_node_ids)
        self.name = name or f"{self.kind.value.lower()}-{self.id}"
        self.children: list[Node] = list(children or [])
        self.last_status: Optional[TickStatus] = None

    def tick(self, board: Blackboard, trace: Optional[list] = None) -> TickStatus:
        raise NotImplementedError

    def reset(self) -> None:
        self.last_status = None
        self._reset_local()
        for child in self.children:
            child.reset()

    def _reset_local(self) -> None:
        pass

    def _enter(self, trace):
        if trace is not None:
            trace.append(self.name)

    def _done(self, status: TickStatus) -> TickStatus:
        self.last_status = status
        return status

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r}>"


class Condition(Node):
    """Stateless leaf evaluating a predicate against the blackboard only."""

    kind = NodeKind.CONDITION

    def __init__(self, predicate: Callable[[Blackboard], bool], name: Optional[str] = None):
        super().__init__(name)
        self.predicate = predicate

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        ok = bool(self.predicate(board))
        return self._done(TickStatus.SUCCESS if ok else TickStatus.FAILURE)


class Action(Node):
    """Leaf running an effectful callable ``fn(board, state)``.

    ``state`` is a per-node dict that persists across ticks until reset;
    it holds running markers, deadlines and the like.
    """

    kind = NodeKind.ACTION

    def __init__(self, fn: Callable[[Blackboard, dict], TickStatus], name: Optional[str] = None):
        super().__init__(name)
        self.fn = fn
        self.state: dict = {}

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        return self._done(self.fn(board, self.state))

    def _reset_local(self):
        self.state.clear()


class Sequence(Node):
    kind = NodeKind.SEQUENCE

    def __init__(self, children: list[Node], name: Optional[str] = None):
        super().__init__(name, children)

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        for child in self.children:
            status = child.tick(board, trace)
            if status is not TickStatus.SUCCESS:
                return self._done(status)
        return self._done(TickStatus.SUCCESS)


class Fallback(Node):
    kind = NodeKind.FALLBACK

    def __init__(self, children: list[Node], name: Optional[str] = None):
        super().__init__(name, children)

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        for child in self.children:
            status = child.tick(board, trace)
            if status is not TickStatus.FAILURE:
                return self._done(status)
        return self._done(TickStatus.FAILURE)


class XorGate(Node):
    """Succeeds iff exactly one chooser flag is raised on the board."""

    kind = NodeKind.XOR_GATE

    def __init__(self, name: Optional[str] = None):
        super().__init__(name)

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        ok = xor_satisfied(board.chooser_flags)
        return self._done(TickStatus.SUCCESS if ok else TickStatus.FAILURE)


class Chooser(Node):
    """Ticks exactly the child whose flag is set; clears the flag on Success.

    Must only be ticked behind an XorGate guard; anything other than exactly
    one raised flag is a guard violation.
    """

    kind = NodeKind.CHOOSER

    def __init__(self, children: list[Node], name: Optional[str] = None):
        super().__init__(name, children)

    def tick(self, board, trace=None) -> TickStatus:
        self._enter(trace)
        flags = board.chooser_flags
        if len(flags) != len(self.children):
            raise StructuralError(
                f"chooser has {len(self.children)} children but the board carries "
                f"{len(flags)} flags"
            )
        raised = [i for i, f in enumerate(flags) if f]
        if len(raised) != 1:
            raise ChooserGuardError(
                f"chooser ticked with {len(raised)} flags set (exactly one required)"
            )
        index = raised[0]
        status = self.children[index].tick(board, trace)
        if status is TickStatus.SUCCESS:
            flags[index] = False
        return self._done(status)


_LEAF_KINDS = {NodeKind.CONDITION, NodeKind.ACTION, NodeKind.XOR_GATE, NodeKind.CUSTOM_SKILL}


def validate_tree(root: Node) -> None:
    """Check the node graph is a rooted tree with correct arities."""
    seen: set[int] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            raise StructuralError(
                f"node {node.name!r} reachable twice (cycle or multiple parents)"
            )
        seen.add(id(node))
        if node.kind in _LEAF_KINDS:
            if node.children:
                raise StructuralError(f"{node.kind.value} node {node.name!r} must be a leaf")
        elif not node.children:
            raise StructuralError(f"{node.kind.value} node {node.name!r} needs >= 1 child")
        stack.extend(node.children)


def tick(root: Node, board: Blackboard, trace: Optional[list] = None) -> TickStatus:
    """Validate the tree, then run one depth-first left-to-right traversal."""
    validate_tree(root)
    return root.tick(board, trace)


def reset(node: Node) -> None:
    """Clear node-local state (step counters, running markers) recursively."""
    node.reset()

"""Embedded skill-centric knowledge graph.

Typed, attributed nodes and edges; time-stamped Tasked/Observed events with
per-subject temporal chaining; skills stored as ordered subgraphs; plain-text
snapshot/restore. Everything lives in memory, so queries are simple index
lookups and tests are fully deterministic.

Timestamps are integer milliseconds since session start. Only the snapshot
rendering converts them to wall-clock strings ("2024-Jul-12-12-00-00.000"
style), anchored at the graph's ``session_start``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Optional

import numpy as np

from .skills import TaskStep, collect_object_refs, substitute_steps

DEFAULT_SESSION_START = datetime(2000, 1, 1, 0, 0, 0)

_MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]


class GraphError(Exception):
    pass


class UnknownNodeError(GraphError, LookupError):
    pass


class OrderingError(GraphError):
    """A new event timestamp ran backwards against the session clock."""


class SkillLibraryError(GraphError):
    pass


class SubstitutionError(GraphError):
    pass


class SnapshotError(GraphError):
    pass


class Label(str, Enum):
    AGENT = "Agent"
    OBJECT = "Object"
    EVENT = "Event"
    SKILL = "SkillNode"


class Relation(str, Enum):
    ASSIGNED_TO = "ASSIGNED_TO"
    TARGETS = "TARGETS"
    USES_SKILL = "USES_SKILL"
    OBSERVATION_OF = "OBSERVATION_OF"
    NEXT_OBSERVATION = "NEXT_OBSERVATION"
    HAS_CHILD = "HAS_CHILD"
    HAS_STEP = "HAS_STEP"


@dataclass
class GraphNode:
    element_id: int
    label: Label
    attributes: dict


@dataclass
class GraphEdge:
    src: int
    dst: int
    relation: Relation
    attributes: dict = field(default_factory=dict)


@dataclass
class EventRecord:
    event_id: int
    kind: str  # "Tasked" | "Observed"
    subject: int
    ts: int
    object_ref: Optional[int] = None
    skill: Optional[str] = None
    params: dict = field(default_factory=dict)
    signature: Optional[str] = None


def render_timestamp(session_start: datetime, ts_ms: int) -> str:
    moment = session_start + timedelta(milliseconds=int(ts_ms))
    return (
        f"{moment.year:04d}-{_MONTHS[moment.month - 1]}-{moment.day:02d}"
        f"-{moment.hour:02d}-{moment.minute:02d}-{moment.second:02d}"
        f".{moment.microsecond // 1000:03d}"
    )


def parse_timestamp(session_start: datetime, text: str) -> int:
    try:
        date_part, millis = text.rsplit(".", 1)
        year, month, day, hour, minute, second = date_part.split("-")
        moment = datetime(
            int(year), _MONTHS.index(month) + 1, int(day), int(hour), int(minute), int(second)
        )
    except (ValueError, IndexError) as exc:
        raise SnapshotError(f"bad timestamp {text!r}") from exc
    delta = moment - session_start
    return int(round(delta.total_seconds() * 1000)) + int(millis)


def _sanitize_value(value, path: str):
    """Coerce an attribute value into the persistence-safe set:
    string | number | (nested) number array."""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float, str)):
        return value
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return [_sanitize_value(v, path) for v in value]
    if value is None:
        return ""
    raise GraphError(f"attribute {path!r} has unsupported value type {type(value).__name__}")


def _sanitize_attrs(attrs: dict) -> dict:
    return {str(k): _sanitize_value(v, str(k)) for k, v in attrs.items()}


class KnowledgeGraph:
    def __init__(self, session_start: Optional[datetime] = None):
        self.session_start = session_start or DEFAULT_SESSION_START
        self.nodes: dict[int, GraphNode] = {}
        self.edges: list[GraphEdge] = []
        self._next_id = 1
        self._out: dict[int, list[GraphEdge]] = {}
        self._in: dict[int, list[GraphEdge]] = {}
        self._tasked_log: list[int] = []
        self._last_obs: dict[int, int] = {}
        self._skills: dict[str, int] = {}
        self._max_event_ts = -1

    # ------------------------------------------------------------------
    # structure

    def _add_node(self, label: Label, attributes: dict) -> GraphNode:
        node = GraphNode(self._next_id, label, _sanitize_attrs(attributes))
        self.nodes[node.element_id] = node
        self._next_id += 1
        return node

    def _add_edge(self, src: int, dst: int, relation: Relation, attributes: dict | None = None):
        edge = GraphEdge(src, dst, relation, _sanitize_attrs(attributes or {}))
        self.edges.append(edge)
        self._out.setdefault(src, []).append(edge)
        self._in.setdefault(dst, []).append(edge)
        return edge

    def node(self, element_id: int) -> GraphNode:
        try:
            return self.nodes[element_id]
        except KeyError:
            raise UnknownNodeError(f"no node with element_id {element_id}") from None

    def out_edges(self, element_id: int, relation: Optional[Relation] = None) -> list[GraphEdge]:
        edges = self._out.get(element_id, [])
        return [e for e in edges if relation is None or e.relation is relation]

    def in_edges(self, element_id: int, relation: Optional[Relation] = None) -> list[GraphEdge]:
        edges = self._in.get(element_id, [])
        return [e for e in edges if relation is None or e.relation is relation]

    # ------------------------------------------------------------------
    # entity seeding

    def add_agent(self, name: str, tip_translation, tip_orientation) -> int:
        node = self._add_node(
            Label.AGENT,
            {
                "Name": name,
                "Tip Translation": tip_translation,
                "Tip Orientation": tip_orientation,
            },
        )
        return node.element_id

    def add_object(self, name: str, color: str, centroid, affordances, mesh) -> int:
        node = self._add_node(
            Label.OBJECT,
            {
                "Name": name,
                "Color": color,
                "Centroid": centroid,
                "Affordances": affordances,
                "Mesh": mesh,
            },
        )
        return node.element_id

    def register_skill(self, name: str, kind: str) -> int:
        """Add a library skill node (kind: base | command | composite)."""
        if name in self._skills:
            raise SkillLibraryError(f"skill {name!r} already registered")
        node = self._add_node(Label.SKILL, {"Name": name, "Kind": kind})
        self._skills[name] = node.element_id
        return node.element_id

    def _skill_node_for(self, name: str) -> int:
        if name not in self._skills:
            self.register_skill(name, "adhoc")
        return self._skills[name]

    # ------------------------------------------------------------------
    # events

    def insert_tasked(
        self,
        agent: int,
        signature: str,
        skill: str,
        object_ref: Optional[int],
        params: dict,
        ts: int,
    ) -> int:
        agent_node = self.node(agent)
        if agent_node.label is not Label.AGENT:
            raise UnknownNodeError(f"node {agent} is not an Agent")
        if object_ref is not None:
            obj_node = self.node(object_ref)
            if obj_node.label is not Label.OBJECT:
                raise UnknownNodeError(f"node {object_ref} is not an Object")
        if ts < self._max_event_ts:
            raise OrderingError(
                f"tasked event at ts={ts} precedes an existing event at ts={self._max_event_ts}"
            )
        event = self._add_node(
            Label.EVENT,
            {
                "Name": "Tasked",
                "Time stamp": int(ts),
                "Signature": signature,
                "Params": json.dumps(params, sort_keys=True),
            },
        )
        self._add_edge(event.element_id, agent, Relation.ASSIGNED_TO)
        if object_ref is not None:
            self._add_edge(event.element_id, object_ref, Relation.TARGETS)
        self._add_edge(event.element_id, self._skill_node_for(skill), Relation.USES_SKILL)
        self._tasked_log.append(event.element_id)
        self._max_event_ts = max(self._max_event_ts, int(ts))
        return event.element_id

    def insert_observed(self, subject: int, state: dict, ts: int) -> int:
        self.node(subject)
        prev = self._last_obs.get(subject)
        if prev is not None:
            prev_ts = self.nodes[prev].attributes["Time stamp"]
            if ts < prev_ts:
                raise OrderingError(
                    f"observation of node {subject} at ts={ts} precedes ts={prev_ts}"
                )
        attrs = {"Name": "Observed", "Time stamp": int(ts)}
        attrs.update(_sanitize_attrs(state))
        event = self._add_node(Label.EVENT, attrs)
        self._add_edge(event.element_id, subject, Relation.OBSERVATION_OF)
        if prev is not None:
            self._add_edge(prev, event.element_id, Relation.NEXT_OBSERVATION)
        self._last_obs[subject] = event.element_id
        self._max_event_ts = max(self._max_event_ts, int(ts))
        return event.element_id

    def _observed_record(self, event_id: int) -> EventRecord:
        node = self.nodes[event_id]
        subject = self.out_edges(event_id, Relation.OBSERVATION_OF)[0].dst
        state = {
            k: v for k, v in node.attributes.items() if k not in ("Name", "Time stamp")
        }
        return EventRecord(
            event_id=event_id,
            kind="Observed",
            subject=subject,
            ts=node.attributes["Time stamp"],
            params=state,
        )

    def _tasked_record(self, event_id: int) -> EventRecord:
        node = self.nodes[event_id]
        subject = self.out_edges(event_id, Relation.ASSIGNED_TO)[0].dst
        targets = self.out_edges(event_id, Relation.TARGETS)
        skills = self.out_edges(event_id, Relation.USES_SKILL)
        return EventRecord(
            event_id=event_id,
            kind="Tasked",
            subject=subject,
            ts=node.attributes["Time stamp"],
            object_ref=targets[0].dst if targets else None,
            skill=self.nodes[skills[0].dst].attributes["Name"] if skills else None,
            params=json.loads(node.attributes.get("Params", "{}")),
            signature=node.attributes.get("Signature"),
        )

    def event_record(self, event_id: int) -> EventRecord:
        node = self.node(event_id)
        if node.label is not Label.EVENT:
            raise UnknownNodeError(f"node {event_id} is not an Event")
        if node.attributes.get("Name") == "Tasked":
            return self._tasked_record(event_id)
        return self._observed_record(event_id)

    def latest_observation(self, subject: int) -> Optional[EventRecord]:
        self.node(subject)
        event_id = self._last_obs.get(subject)
        if event_id is None:
            return None
        return self._observed_record(event_id)

    def observations_of(self, subject: int) -> list[EventRecord]:
        """All observations of ``subject``, walking the NEXT_OBSERVATION chain."""
        self.node(subject)
        firsts = [
            e.src
            for e in self.in_edges(subject, Relation.OBSERVATION_OF)
            if not self.in_edges(e.src, Relation.NEXT_OBSERVATION)
        ]
        if not firsts:
            return []
        chain = []
        current: Optional[int] = firsts[0]
        while current is not None:
            chain.append(self._observed_record(current))
            nxt = self.out_edges(current, Relation.NEXT_OBSERVATION)
            current = nxt[0].dst if nxt else None
        return chain

    def last_n_tasked(self, n: int) -> list[EventRecord]:
        """The min(n, total) most recent Tasked events, oldest first."""
        if n < 0:
            raise ValueError("n must be >= 0")
        ids = self._tasked_log[-n:] if n else []
        return [self._tasked_record(i) for i in ids]

    def tasked_count(self) -> int:
        return len(self._tasked_log)

    @property
    def last_event_ts(self) -> int:
        return max(0, self._max_event_ts)

    def tasked_after(self, event_id: int) -> list[EventRecord]:
        return [self._tasked_record(i) for i in self._tasked_log if i > event_id]

    def outcome_of(self, event_id: int) -> Optional[EventRecord]:
        """The Observed outcome attached to a Tasked event, if finished."""
        obs = self.latest_observation(event_id)
        return obs

    # ------------------------------------------------------------------
    # skills as subgraphs

    def save_skill(self, name: str, steps: list[TaskStep]):
        if name in self._skills:
            raise SkillLibraryError(f"skill {name!r} already exists")
        if not steps:
            raise SkillLibraryError("a skill needs at least one step")
        for i, step in enumerate(steps):
            if "goal_translation" in step.data:
                raise SkillLibraryError(
                    f"step {i} embeds an absolute pose; skills must reference "
                    "objects symbolically"
                )
        root_id = self.register_skill(name, "composite")
        for ordinal, step in enumerate(steps):
            node = self._add_node(
                Label.SKILL,
                {
                    "Kind": "action",
                    "Skill": step.kind.value,
                    "Parameters": json.dumps(step.data, sort_keys=True),
                },
            )
            self._add_edge(root_id, node.element_id, Relation.HAS_STEP, {"ordinal": ordinal})
        return root_id

    def load_skill(self, name: str, substitution: Optional[dict] = None) -> list[TaskStep]:
        if name not in self._skills:
            raise SkillLibraryError(f"unknown skill {name!r}")
        root_id = self._skills[name]
        step_edges = sorted(
            self.out_edges(root_id, Relation.HAS_STEP), key=lambda e: e.attributes["ordinal"]
        )
        if not step_edges:
            raise SkillLibraryError(f"skill {name!r} has no stored steps")
        steps = []
        for edge in step_edges:
            node = self.nodes[edge.dst]
            steps.append(
                TaskStep.from_wire(node.attributes["Skill"], json.loads(node.attributes["Parameters"]))
            )
        substitution = substitution or {}
        if substitution:
            refs = collect_object_refs(steps)
            dangling = sorted(set(substitution) - refs)
            if dangling:
                raise SubstitutionError(
                    f"substitution keys {dangling} are not referenced by skill {name!r}"
                )
            steps = substitute_steps(steps, substitution)
        return steps

    def skill_kind(self, name: str) -> Optional[str]:
        node_id = self._skills.get(name)
        if node_id is None:
            return None
        return self.nodes[node_id].attributes.get("Kind")

    def list_skills(self) -> list[dict]:
        entries = []
        for name, node_id in self._skills.items():
            kind = self.nodes[node_id].attributes.get("Kind")
            steps = len(self.out_edges(node_id, Relation.HAS_STEP))
            entries.append({"name": name, "kind": kind, "steps": steps})
        return entries

    # ------------------------------------------------------------------
    # persistence

    def to_document(self) -> str:
        def render_attrs(attrs: dict) -> dict:
            out = {}
            for k, v in attrs.items():
                if k == "Time stamp":
                    out[k] = render_timestamp(self.session_start, v)
                else:
                    out[k] = v
            return out

        doc = {
            "session_start": render_timestamp(self.session_start, 0),
            "nodes": [
                {
                    "element_id": n.element_id,
                    "label": n.label.value,
                    "attributes": render_attrs(n.attributes),
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.element_id)
            ],
            "edges": [
                {
                    "src": e.src,
                    "dst": e.dst,
                    "relation": e.relation.value,
                    "attributes": e.attributes,
                }
                for e in self.edges
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def snapshot(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_document())

    @classmethod
    def from_document(cls, text: str) -> "KnowledgeGraph":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotError(
                f"snapshot parse error at line {exc.lineno}, column {exc.colno} "
                f"(char {exc.pos}): {exc.msg}"
            ) from exc
        for key in ("session_start", "nodes", "edges"):
            if key not in doc:
                raise SnapshotError(f"snapshot missing {key!r}")

        anchor = datetime(2000, 1, 1)
        offset_ms = parse_timestamp(anchor, doc["session_start"])
        session_start = anchor + timedelta(milliseconds=offset_ms)
        graph = cls(session_start=session_start)

        for raw in doc["nodes"]:
            try:
                label = Label(raw["label"])
                attrs = dict(raw["attributes"])
                element_id = int(raw["element_id"])
            except (KeyError, ValueError, TypeError) as exc:
                raise SnapshotError(f"bad node entry {raw!r}") from exc
            if "Time stamp" in attrs:
                attrs["Time stamp"] = parse_timestamp(session_start, attrs["Time stamp"])
            if element_id in graph.nodes:
                raise SnapshotError(f"duplicate element_id {element_id}")
            graph.nodes[element_id] = GraphNode(element_id, label, attrs)
        graph._next_id = max(graph.nodes, default=0) + 1

        for raw in doc["edges"]:
            try:
                relation = Relation(raw["relation"])
                src, dst = int(raw["src"]), int(raw["dst"])
            except (KeyError, ValueError, TypeError) as exc:
                raise SnapshotError(f"bad edge entry {raw!r}") from exc
            if src not in graph.nodes or dst not in graph.nodes:
                raise SnapshotError(f"edge {raw!r} references a missing node")
            edge = GraphEdge(src, dst, relation, dict(raw.get("attributes", {})))
            graph.edges.append(edge)
            graph._out.setdefault(src, []).append(edge)
            graph._in.setdefault(dst, []).append(edge)

        graph._rebuild_indexes()
        return graph

    def _rebuild_indexes(self) -> None:
        self._tasked_log = [
            n.element_id
            for n in sorted(self.nodes.values(), key=lambda n: n.element_id)
            if n.label is Label.EVENT and n.attributes.get("Name") == "Tasked"
        ]
        self._skills = {}
        for n in sorted(self.nodes.values(), key=lambda n: n.element_id):
            if n.label is Label.SKILL and n.attributes.get("Kind") != "action":
                self._skills[n.attributes["Name"]] = n.element_id
        self._last_obs = {}
        self._max_event_ts = -1
        for n in sorted(self.nodes.values(), key=lambda n: n.element_id):
            if n.label is Label.EVENT:
                self._max_event_ts = max(self._max_event_ts, n.attributes["Time stamp"])
                if n.attributes.get("Name") == "Observed":
                    subject = self.out_edges(n.element_id, Relation.OBSERVATION_OF)[0].dst
                    nxt = self.out_edges(n.element_id, Relation.NEXT_OBSERVATION)
                    if not nxt:
                        self._last_obs[subject] = n.element_id


def restore(path: str) -> KnowledgeGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return KnowledgeGraph.from_document(fh.read())

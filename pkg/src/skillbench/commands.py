"""The function-call command language and its dispatcher.

Grammar (whitespace-insensitive, positional args before keyword args):

    command := IDENT '(' arglist? ')'
    arglist := arg (',' arg)*
    arg     := value | IDENT '=' value
    value   := STRING | NUMBER | '[' (value (',' value)*)? ']'
             | '{' (STRING ':' STRING (',' STRING ':' STRING)*)? '}'

Syntax errors carry the byte offset and the expected-token set. The raw
input line is preserved verbatim; for action commands it becomes the event
Signature in the knowledge graph.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field
from typing import Optional

from .graph import GraphError
from .skills import COMMAND_SKILLS

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?")


class CommandSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {' or '.join(expected)})"
        super().__init__(detail)


class CommandValidationError(ValueError):
    pass


@dataclass
class Command:
    name: str
    positional: list
    keyword: dict
    raw: str = field(default="", compare=False)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, expected: tuple[str, ...] = ()):
        raise CommandSyntaxError(message, self.pos, expected)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        self.skip_ws()
        if self.peek() != char:
            self.error(f"expected {char!r}", (repr(char),))
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        match = _IDENT_RE.match(self.text, self.pos)
        if not match:
            self.error("expected an identifier", ("identifier",))
        self.pos = match.end()
        return match.group(0)

    def string(self) -> str:
        quote = self.peek()
        start = self.pos
        self.pos += 1
        out = []
        while True:
            if self.pos >= len(self.text):
                self.pos = start
                self.error("unterminated string", ("closing quote",))
            ch = self.text[self.pos]
            if ch == "\\":
                if self.pos + 1 >= len(self.text):
                    self.error("dangling escape", ("escaped character",))
                nxt = self.text[self.pos + 1]
                if nxt not in ("\\", "'", '"'):
                    self.error("unsupported escape", ("\\\\", "\\'", '\\"'))
                out.append(nxt)
                self.pos += 2
                continue
            if ch == quote:
                self.pos += 1
                return "".join(out)
            out.append(ch)
            self.pos += 1

    def number(self):
        match = _NUMBER_RE.match(self.text, self.pos)
        if not match:
            self.error("expected a number", ("number",))
        self.pos = match.end()
        text = match.group(0)
        if any(ch in text for ch in ".eE"):
            return float(text)
        return int(text)

    def value(self):
        self.skip_ws()
        ch = self.peek()
        if ch in ("'", '"'):
            return self.string()
        if ch == "[":
            return self.array()
        if ch == "{":
            return self.mapping()
        if ch and (ch.isdigit() or ch in "+-."):
            return self.number()
        self.error("expected a value", ("string", "number", "'['", "'{'"))

    def array(self) -> list:
        self.expect("[")
        items = []
        self.skip_ws()
        if self.peek() == "]":
            self.pos += 1
            return items
        while True:
            items.append(self.value())
            self.skip_ws()
            if self.peek() == "]":
                self.pos += 1
                return items
            self.expect(",")

    def mapping(self) -> dict:
        self.expect("{")
        out: dict = {}
        self.skip_ws()
        if self.peek() == "}":
            self.pos += 1
            return out
        while True:
            self.skip_ws()
            if self.peek() not in ("'", '"'):
                self.error("map keys must be strings", ("string",))
            key = self.string()
            self.expect(":")
            self.skip_ws()
            if self.peek() not in ("'", '"'):
                self.error("map values must be strings", ("string",))
            out[key] = self.string()
            self.skip_ws()
            if self.peek() == "}":
                self.pos += 1
                return out
            self.expect(",")

    def parse(self) -> Command:
        name = self.ident()
        self.expect("(")
        positional: list = []
        keyword: dict = {}
        self.skip_ws()
        if self.peek() == ")":
            self.pos += 1
        else:
            while True:
                self.skip_ws()
                if _IDENT_RE.match(self.text, self.pos):
                    start = self.pos
                    key = self.ident()
                    if key in keyword:
                        self.pos = start
                        self.error(f"duplicate keyword argument {key!r}", ("a fresh name",))
                    self.expect("=")
                    keyword[key] = self.value()
                else:
                    if keyword:
                        self.error(
                            "positional arguments must precede keyword arguments",
                            ("identifier",),
                        )
                    positional.append(self.value())
                self.skip_ws()
                if self.peek() == ")":
                    self.pos += 1
                    break
                if self.peek() == ",":
                    self.pos += 1
                    continue
                self.error("expected ',' or ')'", ("','", "')'"))
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing input after command", ("end of input",))
        return Command(name, positional, keyword, raw=self.text)


def parse(text: str) -> Command:
    return _Parser(text).parse()


def render_value(value) -> str:
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    if isinstance(value, bool):
        raise ValueError("booleans are not part of the command grammar")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{render_value(k)}: {render_value(v)}" for k, v in value.items()) + "}"
    raise ValueError(f"cannot render value of type {type(value).__name__}")


def render(cmd: Command) -> str:
    parts = [render_value(v) for v in cmd.positional]
    parts += [f"{k}={render_value(v)}" for k, v in cmd.keyword.items()]
    return f"{cmd.name}({', '.join(parts)})"


# ----------------------------------------------------------------------
# argument binding

_REQUIRED = object()


@dataclass(frozen=True)
class Param:
    name: str
    type: str  # str | number | int | vec3 | strmap
    default: object = _REQUIRED


def _check_type(param: Param, value):
    if param.type == "str":
        if not isinstance(value, str):
            raise CommandValidationError(f"{param.name} must be a string")
    elif param.type == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CommandValidationError(f"{param.name} must be a number")
    elif param.type == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise CommandValidationError(f"{param.name} must be an integer")
    elif param.type == "vec3":
        if (
            not isinstance(value, list)
            or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            raise CommandValidationError(f"{param.name} must be a list of 3 numbers")
    elif param.type == "strmap":
        if not isinstance(value, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in value.items()
        ):
            raise CommandValidationError(f"{param.name} must be a string-to-string map")
    return value


def bind_args(cmd: Command, params: tuple[Param, ...]) -> dict:
    if len(cmd.positional) > len(params):
        raise CommandValidationError(
            f"{cmd.name} takes at most {len(params)} arguments, got {len(cmd.positional)}"
        )
    bound: dict = {}
    for param, value in zip(params, cmd.positional):
        bound[param.name] = _check_type(param, value)
    names = {p.name: p for p in params}
    for key, value in cmd.keyword.items():
        if key not in names:
            raise CommandValidationError(f"{cmd.name} has no argument named {key!r}")
        if key in bound:
            raise CommandValidationError(f"argument {key!r} given twice")
        bound[key] = _check_type(names[key], value)
    for param in params:
        if param.name not in bound:
            if param.default is _REQUIRED:
                raise CommandValidationError(f"{cmd.name} is missing argument {param.name!r}")
            bound[param.name] = param.default
    return bound


# ----------------------------------------------------------------------
# dispatch

_ACTION_SIGNATURES: dict[str, tuple[Param, ...]] = {
    "pickup_brick": (Param("color", "str"), Param("offset", "number", 3)),
    "drop_brick": (Param("orientation", "vec3", [0, 0, 0]), Param("offset", "number", 3)),
    "move_hand": (
        Param("orientation", "vec3", [0, 0, 0]),
        Param("translation", "vec3", [0, 0, 0]),
    ),
    "move_by_object": (Param("color", "str"), Param("translation", "vec3", [0, 0, 0])),
    "do_skill_from_library": (Param("name", "str"), Param("substitution", "strmap", {})),
}

_QUERY_SIGNATURES: dict[str, tuple[Param, ...]] = {
    "show_last_n_tasks": (Param("n", "int", 10),),
    "list_skills": (),
    "save_last_n_tasks": (Param("name", "str"), Param("n", "int")),
    "stop": (),
    "reset_world": (),
}

KNOWN_COMMANDS = tuple(sorted({**_ACTION_SIGNATURES, **_QUERY_SIGNATURES}))


def _error(message: str, kind: str = "validation", **extra) -> dict:
    payload = {"message": message, "kind": kind}
    payload.update({k: v for k, v in extra.items() if v not in (None, [], ())})
    return {"error": payload}


def dispatch(cmd: Command, workbench) -> dict:
    """Route a parsed command: actions become Tasked events, queries answer
    synchronously without touching robot state."""
    name = cmd.name
    if name in _ACTION_SIGNATURES:
        try:
            args = bind_args(cmd, _ACTION_SIGNATURES[name])
        except CommandValidationError as exc:
            return _error(str(exc))
        return _dispatch_action(name, args, cmd, workbench)
    if name in _QUERY_SIGNATURES:
        try:
            args = bind_args(cmd, _QUERY_SIGNATURES[name])
        except CommandValidationError as exc:
            return _error(str(exc))
        return _dispatch_query(name, args, workbench)
    suggestions = difflib.get_close_matches(name, KNOWN_COMMANDS, n=3)
    return _error(f"unknown command {name!r}", kind="dispatch", suggestions=suggestions)


def _dispatch_action(name: str, args: dict, cmd: Command, workbench) -> dict:
    if name == "do_skill_from_library":
        skill = args["name"]
        params = {"substitution": args["substitution"]}
        color = None
    else:
        skill = name
        params = dict(args)
        color = args.get("color")
    event_id = workbench.insert_task(
        signature=cmd.raw, skill=skill, color=color, params=params
    )
    return {"event_id": event_id}


def _dispatch_query(name: str, args: dict, workbench) -> dict:
    if name == "show_last_n_tasks":
        if args["n"] < 0:
            return _error("n must be >= 0")
        return {"result": workbench.task_history(args["n"])}
    if name == "list_skills":
        return {"result": workbench.kg.list_skills()}
    if name == "save_last_n_tasks":
        if args["n"] < 1:
            return _error("n must be >= 1")
        try:
            count = workbench.save_recent_tasks(args["name"], args["n"])
        except (GraphError, CommandValidationError, ValueError) as exc:
            return _error(str(exc))
        return {"result": {"skill": args["name"], "steps": count}}
    if name == "stop":
        workbench.controller.request_stop()
        return {"result": "stop requested"}
    workbench.reset_world()
    return {"result": "world reset"}


def execute(text: str, workbench) -> dict:
    """Parse then dispatch; parse errors come back as structured payloads."""
    try:
        cmd = parse(text)
    except CommandSyntaxError as exc:
        return _error(
            str(exc), kind="parse", offset=exc.offset, expected=list(exc.expected)
        )
    return dispatch(cmd, workbench)

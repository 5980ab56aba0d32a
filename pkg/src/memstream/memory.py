"""Typed hierarchical memory: path addressing and revision application.

Values are plain JSON-compatible Python objects (bool, int, float, str,
list, dict with string keys). Every operation is pure: inputs are never
mutated, results share untouched subtrees with their inputs, and inserted
values are copied so later caller-side mutation cannot leak in.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass
from typing import Union

Value = Union[bool, int, float, str, list, dict]

ADD = "add"
UPDATE = "update"
OPERATIONS = (ADD, UPDATE)


class RevisionError(Exception):
    """Base class for path and revision failures."""


class PathSyntaxError(RevisionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class PathNotFound(RevisionError):
    pass


class PathAlreadyExists(RevisionError):
    pass


class ParentMissing(RevisionError):
    pass


class IndexOutOfRange(RevisionError):
    pass


class SchemaViolation(RevisionError):
    """The revised memory would no longer conform to its schema."""


class _AbsentType:
    """Singleton marker for a path that resolves to nothing."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSENT"

    def __bool__(self) -> bool:
        return False


ABSENT = _AbsentType()

# Digit-only segments without leading zeros are canonicalized to ints so
# that the textual form round-trips; "007" stays a map key.
_INDEX_FORM = re.compile(r"(?:0|[1-9][0-9]*)\Z")


def _canonical_segment(seg: str | int) -> str | int:
    if isinstance(seg, bool):
        raise TypeError("path segments must be str or int, not bool")
    if isinstance(seg, int):
        if seg < 0:
            raise ValueError(f"list index must be non-negative, got {seg}")
        return seg
    if isinstance(seg, str):
        if not seg:
            raise ValueError("map key segments must be non-empty")
        if _INDEX_FORM.match(seg):
            return int(seg)
        return seg
    raise TypeError(f"path segments must be str or int, got {type(seg).__name__}")


@dataclass(frozen=True)
class Path:
    """Address of a node in the memory: map keys and list indices.

    Against a map container an int segment addresses the decimal-string
    key; against a list it is the index.
    """

    segments: tuple[str | int, ...]

    def __post_init__(self):
        segs = tuple(_canonical_segment(s) for s in self.segments)
        if not segs:
            raise ValueError("a path needs at least one segment")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def of(cls, *segments: str | int) -> "Path":
        return cls(tuple(segments))

    def __str__(self) -> str:
        return format_path(self)


def _escape_key(key: str) -> str:
    return key.replace("~", "~0").replace("/", "~1")


def _unescape_key(raw: str, base_offset: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "~":
            if i + 1 >= len(raw) or raw[i + 1] not in "01":
                raise PathSyntaxError("bad escape, expected ~0 or ~1", base_offset + i)
            out.append("~" if raw[i + 1] == "0" else "/")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def format_path(path: Path) -> str:
    """Canonical text form: slash-delimited, ~0/~1 escapes inside keys."""
    parts = []
    for seg in path.segments:
        parts.append(str(seg) if isinstance(seg, int) else _escape_key(seg))
    return "/" + "/".join(parts)


def parse_path(text: str) -> Path:
    """Inverse of format_path; raises PathSyntaxError with an offset."""
    if not text.startswith("/"):
        raise PathSyntaxError("path must start with '/'", 0)
    segments = []
    pos = 1
    for raw in text[1:].split("/"):
        if not raw:
            raise PathSyntaxError("empty path segment", pos)
        segments.append(_unescape_key(raw, pos))
        pos += len(raw) + 1
    return Path(tuple(segments))


@dataclass(frozen=True)
class Revision:
    """One proposed memory change: add a new path or replace an existing one."""

    path: Path
    op: str
    value: Value

    def __post_init__(self):
        if self.op not in OPERATIONS:
            raise ValueError(f"op must be one of {OPERATIONS}, got {self.op!r}")


def check_value(value: Value, where: str = "value") -> None:
    """Reject non-JSON kinds, empty map keys, and non-finite floats."""
    if isinstance(value, bool) or isinstance(value, (int, str)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"{where}: floats must be finite")
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            check_value(item, f"{where}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str) or not key:
                raise ValueError(f"{where}: map keys must be non-empty strings")
            check_value(item, f"{where}.{key}")
        return
    raise TypeError(f"{where}: unsupported value type {type(value).__name__}")


def dumps_canonical(value: Value) -> str:
    """Canonical JSON: insertion-ordered keys, compact separators, UTF-8 text."""
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class Memory:
    """A map-rooted value tree. Key insertion order is part of identity:
    the canonical serialization preserves it byte for byte."""

    root: dict

    def __post_init__(self):
        if not isinstance(self.root, dict):
            raise TypeError("memory root must be a map")
        check_value(self.root, "root")

    @classmethod
    def empty(cls) -> "Memory":
        return cls({})

    def get(self, path: Path):
        return resolve_path(self, path)

    def to_json(self) -> str:
        return dumps_canonical(self.root)

    @classmethod
    def from_json(cls, text: str) -> "Memory":
        root = json.loads(text)
        if not isinstance(root, dict):
            raise ValueError("memory root must be a JSON object")
        return cls(root)


def resolve_path(memory: Memory, path: Path):
    """Value at `path`, or ABSENT. Absence is a result, never an error."""
    node = memory.root
    for seg in path.segments:
        if isinstance(node, dict):
            key = str(seg) if isinstance(seg, int) else seg
            if key not in node:
                return ABSENT
            node = node[key]
        elif isinstance(node, list):
            if not isinstance(seg, int) or seg >= len(node):
                return ABSENT
            node = node[seg]
        else:
            return ABSENT
    return node


def _prefix_text(path: Path, length: int) -> str:
    return format_path(Path(path.segments[:length]))


def apply_revision(memory: Memory, revision: Revision, schema=None) -> Memory:
    """Apply one add/update and return a new memory; the input is untouched.

    `add` requires an absent target under an existing parent; list adds
    append, so the index must equal the current length. `update` replaces
    the whole value at an existing path. When `schema` is given (anything
    with a validate(root) -> violation-or-None method) the post-state must
    conform, otherwise SchemaViolation is raised and nothing is returned.
    """
    check_value(revision.value)
    segments = revision.path.segments
    op = revision.op

    new_root = dict(memory.root)
    parent: dict | list = new_root
    for depth, seg in enumerate(segments[:-1]):
        child = _lookup(parent, seg)
        if child is ABSENT or not isinstance(child, (dict, list)):
            err = ParentMissing if op == ADD else PathNotFound
            raise err(f"no container at {_prefix_text(revision.path, depth + 1)}")
        copied = dict(child) if isinstance(child, dict) else list(child)
        _assign(parent, seg, copied)
        parent = copied

    last = segments[-1]
    where = format_path(revision.path)
    if isinstance(parent, dict):
        key = str(last) if isinstance(last, int) else last
        if op == UPDATE and key not in parent:
            raise PathNotFound(f"no value at {where}")
        if op == ADD and key in parent:
            raise PathAlreadyExists(f"value already present at {where}")
        parent[key] = copy.deepcopy(revision.value)
    else:
        if not isinstance(last, int):
            raise IndexOutOfRange(f"list position must be an integer at {where}")
        if op == UPDATE:
            if last >= len(parent):
                raise IndexOutOfRange(
                    f"update index {last} is beyond list length {len(parent)} at {where}"
                )
            parent[last] = copy.deepcopy(revision.value)
        else:
            if last != len(parent):
                raise IndexOutOfRange(
                    f"add index {last} must equal list length {len(parent)} at {where}"
                )
            parent.append(copy.deepcopy(revision.value))

    result = Memory(new_root)
    if schema is not None:
        violation = schema.validate(result.root)
        if violation is not None:
            raise SchemaViolation(f"revision at {where}: {violation}")
    return result


def _lookup(container: dict | list, seg: str | int):
    if isinstance(container, dict):
        key = str(seg) if isinstance(seg, int) else seg
        return container.get(key, ABSENT)
    if isinstance(seg, int) and 0 <= seg < len(container):
        return container[seg]
    return ABSENT


def _assign(container: dict | list, seg: str | int, value) -> None:
    if isinstance(container, dict):
        container[str(seg) if isinstance(seg, int) else seg] = value
    else:
        container[seg] = value

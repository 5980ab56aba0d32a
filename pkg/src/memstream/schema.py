"""Memory schemas: typed nodes, descriptor parsing, shape validation, and
the deterministic class-style rendering placed into prompts.

The stored form is a JSON descriptor (kind tags, fields, docs). The
class-style rendering is what the model sees; parse_rendered() reads that
form back, which is also how generated schemas are ingested.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass

KINDS = ("integer", "float", "string", "boolean", "list", "map", "record")

_PY_TO_KIND = {"int": "integer", "float": "float", "str": "string", "bool": "boolean"}
_KIND_TO_PY = {"integer": "int", "float": "float", "string": "str", "boolean": "bool"}


class SchemaError(Exception):
    pass


class SchemaSyntaxError(SchemaError):
    pass


class DuplicateField(SchemaError):
    pass


class UnknownTypeName(SchemaError):
    pass


@dataclass(frozen=True)
class SchemaNode:
    """One node of the type tree. `kind` selects which extra fields apply:
    list -> items, map -> values, record -> fields/name/doc."""

    kind: str
    items: "SchemaNode | None" = None
    values: "SchemaNode | None" = None
    fields: tuple = ()
    name: str = ""
    doc: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownTypeName(f"unknown type kind {self.kind!r}")
        if self.kind == "list" and self.items is None:
            raise SchemaError("list nodes need an item type")
        if self.kind == "map" and self.values is None:
            raise SchemaError("map nodes need a value type")
        if self.kind == "record":
            object.__setattr__(self, "fields", tuple(self.fields))
            seen = set()
            for fname, fnode in self.fields:
                if not isinstance(fname, str) or not fname:
                    raise SchemaError("record field names must be non-empty strings")
                if fname in seen:
                    raise DuplicateField(f"duplicate field {fname!r}")
                seen.add(fname)
                if not isinstance(fnode, SchemaNode):
                    raise SchemaError(f"field {fname!r} needs a SchemaNode type")


def integer() -> SchemaNode:
    return SchemaNode("integer")


def floating() -> SchemaNode:
    return SchemaNode("float")


def string() -> SchemaNode:
    return SchemaNode("string")


def boolean() -> SchemaNode:
    return SchemaNode("boolean")


def list_of(items: SchemaNode) -> SchemaNode:
    return SchemaNode("list", items=items)


def map_of(values: SchemaNode) -> SchemaNode:
    return SchemaNode("map", values=values)


def record(name: str, doc: str, fields) -> SchemaNode:
    return SchemaNode("record", fields=tuple(fields), name=name, doc=doc)


@dataclass(frozen=True)
class Violation:
    """Shape mismatch report: deepest offending path plus expected/actual."""

    path: tuple
    expected: str
    actual: str

    def __str__(self) -> str:
        where = "/" + "/".join(str(s) for s in self.path) if self.path else "(root)"
        return f"expected {self.expected} at {where}, found {self.actual}"


def _kind_of(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "map"
    return type(value).__name__


def validate(value, node: SchemaNode, _path: tuple = ()) -> Violation | None:
    """Shape-check `value` against `node`; None means it conforms.

    Records accept an empty map (nothing recorded yet) or the complete
    field set; a partial record is a violation. Integers are accepted
    where floats are expected, never the other way around.
    """
    kind = node.kind
    if kind == "integer":
        if isinstance(value, int) and not isinstance(value, bool):
            return None
        return Violation(_path, "integer", _kind_of(value))
    if kind == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return None
        return Violation(_path, "float", _kind_of(value))
    if kind == "string":
        return None if isinstance(value, str) else Violation(_path, "string", _kind_of(value))
    if kind == "boolean":
        return None if isinstance(value, bool) else Violation(_path, "boolean", _kind_of(value))
    if kind == "list":
        if not isinstance(value, list):
            return Violation(_path, "list", _kind_of(value))
        for i, item in enumerate(value):
            bad = validate(item, node.items, _path + (i,))
            if bad is not None:
                return bad
        return None
    if kind == "map":
        if not isinstance(value, dict):
            return Violation(_path, "map", _kind_of(value))
        for key, item in value.items():
            if not isinstance(key, str) or not key:
                return Violation(_path, "map with non-empty string keys", repr(key))
            bad = validate(item, node.values, _path + (key,))
            if bad is not None:
                return bad
        return None
    # record
    label = f"record {node.name}" if node.name else "record"
    if not isinstance(value, dict):
        return Violation(_path, label, _kind_of(value))
    if not value:
        return None
    names = [fname for fname, _ in node.fields]
    for key in value:
        if key not in names:
            return Violation(_path + (key,), f"a field of {label}", f"unexpected field {key!r}")
    for fname, fnode in node.fields:
        if fname not in value:
            return Violation(_path, f"complete {label}", f"missing field {fname!r}")
        bad = validate(value[fname], fnode, _path + (fname,))
        if bad is not None:
            return bad
    return None


@dataclass(frozen=True)
class Schema:
    """A named root node (record or map) with its documentation string."""

    name: str
    doc: str
    root: SchemaNode

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError("schemas need a non-empty name")
        if self.root.kind not in ("record", "map"):
            raise SchemaError("schema root must be a record or a map")
        if self.root.kind == "record" and (
            self.root.name != self.name or self.root.doc != self.doc
        ):
            object.__setattr__(
                self,
                "root",
                SchemaNode(
                    "record", fields=self.root.fields, name=self.name, doc=self.doc
                ),
            )
        _check_record_names(self.root, set())

    def validate(self, value) -> Violation | None:
        return validate(value, self.root)


def _check_record_names(node: SchemaNode, seen: set) -> None:
    if node.kind == "record":
        if not node.name:
            raise SchemaError("nested records need names for rendering")
        if node.name in seen:
            raise SchemaError(f"record name {node.name!r} used more than once")
        seen.add(node.name)
        for _, fnode in node.fields:
            _check_record_names(fnode, seen)
    elif node.kind == "list":
        _check_record_names(node.items, seen)
    elif node.kind == "map":
        _check_record_names(node.values, seen)


# ---------------------------------------------------------------------------
# JSON descriptor form (the stored `.schema.json` format)
# ---------------------------------------------------------------------------

def parse_schema(text: str) -> Schema:
    """Parse the JSON schema descriptor."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaSyntaxError(f"descriptor is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaSyntaxError("descriptor must be a JSON object")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaSyntaxError("descriptor needs a non-empty 'name'")
    doc = data.get("doc", "")
    if not isinstance(doc, str):
        raise SchemaSyntaxError("'doc' must be a string")
    if "root" not in data:
        raise SchemaSyntaxError("descriptor needs a 'root' node")
    root = _node_from_descriptor(data["root"], "root")
    return Schema(name=name, doc=doc, root=root)


def _node_from_descriptor(data, where: str) -> SchemaNode:
    if not isinstance(data, dict):
        raise SchemaSyntaxError(f"{where}: node must be a JSON object")
    kind = data.get("kind")
    if kind not in KINDS:
        raise UnknownTypeName(f"{where}: unknown kind {kind!r}")
    if kind == "list":
        if "items" not in data:
            raise SchemaSyntaxError(f"{where}: list node needs 'items'")
        return SchemaNode("list", items=_node_from_descriptor(data["items"], where + ".items"))
    if kind == "map":
        if "values" not in data:
            raise SchemaSyntaxError(f"{where}: map node needs 'values'")
        return SchemaNode("map", values=_node_from_descriptor(data["values"], where + ".values"))
    if kind == "record":
        fields = []
        for spec in data.get("fields", []):
            if not isinstance(spec, dict) or "name" not in spec or "type" not in spec:
                raise SchemaSyntaxError(f"{where}: record fields need 'name' and 'type'")
            fields.append(
                (spec["name"], _node_from_descriptor(spec["type"], f"{where}.{spec['name']}"))
            )
        return record(data.get("name", ""), data.get("doc", ""), fields)
    return SchemaNode(kind)


def to_descriptor(schema: Schema) -> dict:
    return {
        "name": schema.name,
        "doc": schema.doc,
        "root": _node_to_descriptor(schema.root, is_root=True),
    }


def _node_to_descriptor(node: SchemaNode, is_root: bool = False) -> dict:
    if node.kind == "list":
        return {"kind": "list", "items": _node_to_descriptor(node.items)}
    if node.kind == "map":
        return {"kind": "map", "values": _node_to_descriptor(node.values)}
    if node.kind == "record":
        out: dict = {"kind": "record"}
        if not is_root:
            out["name"] = node.name
            if node.doc:
                out["doc"] = node.doc
        out["fields"] = [
            {"name": fname, "type": _node_to_descriptor(fnode)} for fname, fnode in node.fields
        ]
        return out
    return {"kind": node.kind}


def descriptor_json(schema: Schema) -> str:
    """Deterministic pretty JSON of the descriptor, for `.schema.json` files."""
    return json.dumps(to_descriptor(schema), indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# Class-style prompt rendering and its inverse
# ---------------------------------------------------------------------------

def render_for_prompt(schema: Schema) -> str:
    """Deterministic class-style text of the schema; byte-identical across
    runs so it can sit in the static prompt prefix."""
    if schema.root.kind == "map":
        lines = []
        if schema.doc:
            lines.append(f'"""{schema.doc}"""')
        lines.append(f"{schema.name} = dict[str, {_annotation(schema.root.values)}]")
        return "\n".join(lines) + "\n"
    return _render_record(schema.root, 0)


def _render_record(node: SchemaNode, level: int) -> str:
    pad = "    " * level
    lines = [f"{pad}@dataclasses.dataclass", f"{pad}class {node.name}:"]
    body_pad = pad + "    "
    body = []
    if node.doc:
        body.append(f'{body_pad}"""{node.doc}"""')
    for sub in _direct_records(node):
        body.append(_render_record(sub, level + 1).rstrip("\n"))
    for fname, fnode in node.fields:
        body.append(f"{body_pad}{fname}: {_annotation(fnode)}")
    if not body:
        body.append(f"{body_pad}pass")
    return "\n".join(lines + body) + "\n"


def _direct_records(node: SchemaNode) -> list[SchemaNode]:
    """Record nodes referenced by this record's fields, in first-use order,
    without descending into other records."""
    found: list[SchemaNode] = []

    def walk(n: SchemaNode) -> None:
        if n.kind == "record":
            if all(f.name != n.name for f in found):
                found.append(n)
        elif n.kind == "list":
            walk(n.items)
        elif n.kind == "map":
            walk(n.values)

    for _, fnode in node.fields:
        walk(fnode)
    return found


def _annotation(node: SchemaNode) -> str:
    if node.kind == "list":
        return f"list[{_annotation(node.items)}]"
    if node.kind == "map":
        return f"dict[str, {_annotation(node.values)}]"
    if node.kind == "record":
        return node.name
    return _KIND_TO_PY[node.kind]


def parse_rendered(text: str) -> Schema:
    """Parse a class-style schema declaration back into a Schema.

    Accepts the output of render_for_prompt and the same shape as produced
    by a model: decorated (or bare) class declarations with docstrings,
    nested classes, and `name: type` annotations using str/int/float/bool,
    list[...] and dict[str, ...].
    """
    try:
        module = ast.parse(text)
    except SyntaxError as exc:
        raise SchemaSyntaxError(f"line {exc.lineno}: {exc.msg}") from exc
    for stmt in module.body:
        if isinstance(stmt, ast.ClassDef):
            root = _record_from_classdef(stmt, {})
            return Schema(name=root.name, doc=root.doc, root=root)
    doc = ast.get_docstring(module, clean=False) or ""
    for stmt in module.body:
        if (
            isinstance(stmt, ast.Assign)
            and len(stmt.targets) == 1
            and isinstance(stmt.targets[0], ast.Name)
        ):
            node = _node_from_annotation(stmt.value, {}, stmt.targets[0].id)
            if node.kind != "map":
                raise SchemaSyntaxError("top-level alias schemas must be dict[str, ...]")
            return Schema(name=stmt.targets[0].id, doc=doc, root=node)
    raise SchemaSyntaxError("no schema class declaration found")


def _record_from_classdef(cls: ast.ClassDef, env: dict) -> SchemaNode:
    doc = ast.get_docstring(cls, clean=False) or ""
    local_env = dict(env)
    fields = []
    for stmt in cls.body:
        if isinstance(stmt, ast.ClassDef):
            sub = _record_from_classdef(stmt, local_env)
            local_env[sub.name] = sub
        elif isinstance(stmt, ast.AnnAssign) and isinstance(stmt.target, ast.Name):
            fields.append(
                (stmt.target.id, _node_from_annotation(stmt.annotation, local_env, stmt.target.id))
            )
    return record(cls.name, doc, fields)


def _node_from_annotation(anno, env: dict, where: str) -> SchemaNode:
    if isinstance(anno, ast.Name):
        if anno.id in _PY_TO_KIND:
            return SchemaNode(_PY_TO_KIND[anno.id])
        if anno.id in env:
            return env[anno.id]
        raise UnknownTypeName(f"unknown type {anno.id!r} in field {where!r}")
    if isinstance(anno, ast.Subscript) and isinstance(anno.value, ast.Name):
        base = anno.value.id
        if base in ("list", "List"):
            return list_of(_node_from_annotation(anno.slice, env, where))
        if base in ("dict", "Dict"):
            if not isinstance(anno.slice, ast.Tuple) or len(anno.slice.elts) != 2:
                raise SchemaSyntaxError(f"dict annotation in field {where!r} needs two arguments")
            key, val = anno.slice.elts
            if not (isinstance(key, ast.Name) and key.id == "str"):
                raise SchemaSyntaxError(f"dict keys must be str in field {where!r}")
            return map_of(_node_from_annotation(val, env, where))
    raise SchemaSyntaxError(f"unsupported annotation in field {where!r}")

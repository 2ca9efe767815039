"""Canonical text grammar for task trees, plus a tolerant parser.

Canonical form (the wire format shown to the LLM and the user) is one line
per node, depth first:

    <4 spaces * depth><dotted ordinal>. <name> - (<status>)[ [<key>: <value>]]...

where the dotted ordinal is the 1-based child-index chain from the root
(root = ``1``, its second child = ``1.2``) and non-status attributes follow
in key order. ``from_text`` accepts the sloppier shapes an LLM produces:
2-8 space or tab indentation, ``-``/``*`` bullets, missing ordinals, and
missing statuses (defaulting to todo).
"""

from __future__ import annotations

import re

from .errors import ParseError
from .tree import Ptt, STATUS_VALUES, new_tree

INDENT = "    "

_BULLET_RE = re.compile(r"^[-*]\s+")
_ORDINAL_RE = re.compile(r"^(\d+(?:\.\d+)*)[.)]\s+")
_ATTR_RE = re.compile(r"\s*\[([^\]\n]*)\]\s*$")
_STATUS_RE = re.compile(r"^(.*?)\s+-\s+\(([^()]*)\)\s*$")


def to_text(tree: Ptt) -> str:
    lines: list[str] = []

    def walk(node_id: int, ordinal: str, depth: int) -> None:
        node = tree.nodes[node_id]
        extras = "".join(
            f" [{key}: {node.attributes[key]}]"
            for key in sorted(node.attributes)
            if key != "status"
        )
        lines.append(f"{INDENT * depth}{ordinal}. {node.name} - ({node.status}){extras}")
        for index, child in enumerate(node.children, start=1):
            walk(child, f"{ordinal}.{index}", depth + 1)

    tree.validate()
    walk(tree.root, "1", 0)
    return "\n".join(lines)


def _normalize_status(raw: str) -> str:
    return re.sub(r"[\s_]+", "-", raw.strip().lower())


def _parse_line(raw: str, lineno: int):
    """Split one line into (indent_width, ordinal_depth, name, status, attrs)."""
    stripped = raw.rstrip()
    body = stripped.lstrip(" \t")
    leading = stripped[: len(stripped) - len(body)]
    width = len(leading.expandtabs(4))

    ordinal_depth = None
    m = _ORDINAL_RE.match(body)
    if m:
        ordinal_depth = m.group(1).count(".")
        body = body[m.end():]
    else:
        m = _BULLET_RE.match(body)
        if m:
            body = body[m.end():]
            m = _ORDINAL_RE.match(body)
            if m:
                ordinal_depth = m.group(1).count(".")
                body = body[m.end():]

    attrs: list[tuple[str, str]] = []
    while True:
        m = _ATTR_RE.search(body)
        if not m:
            break
        inner = m.group(1)
        if ":" not in inner:
            raise ParseError(f"attribute {inner!r} is missing a ':' separator", lineno)
        key, value = inner.split(":", 1)
        key = key.strip()
        if not key:
            raise ParseError("attribute with empty key", lineno)
        attrs.insert(0, (key, value.strip()))
        body = body[: m.start()]

    status = "todo"
    m = _STATUS_RE.match(body)
    if m:
        candidate = _normalize_status(m.group(2))
        if candidate not in STATUS_VALUES:
            raise ParseError(
                f"unknown status {m.group(2).strip()!r}; expected one of {sorted(STATUS_VALUES)}",
                lineno,
            )
        status = candidate
        body = m.group(1)

    name = body.strip()
    if not name:
        raise ParseError("node line has an empty name", lineno)
    return width, ordinal_depth, name, status, attrs


def from_text(text: str) -> Ptt:
    """Parse tree text, accepting the tolerant variants described above.

    Raises ParseError (with a line number) for empty input, indentation jumps
    of more than one level, inconsistent dedents, several roots, or unknown
    statuses.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        entries.append((lineno, *_parse_line(raw, lineno)))
    if not entries:
        raise ParseError("empty tree text")

    if all(e[2] is not None for e in entries):
        depths = [e[2] for e in entries]
    else:
        depths = _depths_from_indent(entries)

    first_lineno = entries[0][0]
    if depths[0] != 0:
        raise ParseError("first node must be the root", first_lineno)

    tree = new_tree(entries[0][3])
    _apply_attrs(tree, tree.root, entries[0][5], entries[0][4], entries[0][0])
    stack: list[tuple[int, int]] = [(0, tree.root)]  # (depth, node id)
    previous_depth = 0
    for (lineno, _width, _odepth, name, status, attrs), depth in zip(entries[1:], depths[1:]):
        if depth == 0:
            raise ParseError("a tree has exactly one root; found a second top-level node", lineno)
        if depth > previous_depth + 1:
            raise ParseError(
                f"indentation jumps {depth - previous_depth} levels past its parent", lineno
            )
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if not stack or stack[-1][0] != depth - 1:
            raise ParseError("node has no parent at the enclosing level", lineno)
        node_id = tree.add_child(stack[-1][1], name)
        _apply_attrs(tree, node_id, attrs, status, lineno)
        stack.append((depth, node_id))
        previous_depth = depth
    return tree


def _apply_attrs(tree: Ptt, node_id: int, attrs, status: str, lineno: int) -> None:
    from .errors import InvalidArgument

    try:
        tree.set_attribute(node_id, "status", status)
        for key, value in attrs:
            tree.set_attribute(node_id, key, value)
    except InvalidArgument as exc:
        raise ParseError(str(exc), lineno) from exc


def _depths_from_indent(entries) -> list[int]:
    """Infer depths from leading whitespace (tabs expand to 4 spaces)."""
    base = entries[0][1]
    unit: int | None = None
    depths = [0]
    # stack of (width, depth) for the current ancestor chain
    stack: list[tuple[int, int]] = [(base, 0)]
    for lineno, width, _odepth, _name, _status, _attrs in entries[1:]:
        if width < base:
            raise ParseError("line is indented left of the root", lineno)
        top_width, top_depth = stack[-1]
        if width > top_width:
            delta = width - top_width
            if unit is None:
                if not 2 <= delta <= 8:
                    raise ParseError(
                        f"indentation step of {delta} spaces; expected 2-8 spaces or tabs", lineno
                    )
                unit = delta
            elif delta > unit:
                raise ParseError(
                    f"indentation jumps {delta // unit} levels past its parent", lineno
                )
            elif delta != unit:
                raise ParseError(
                    f"indentation of {delta} spaces does not match the document's {unit}-space unit",
                    lineno,
                )
            depth = top_depth + 1
            stack.append((width, depth))
        else:
            while stack and stack[-1][0] > width:
                stack.pop()
            if not stack or stack[-1][0] != width:
                raise ParseError("dedent does not line up with any enclosing level", lineno)
            depth = stack[-1][1]
        depths.append(depth)
    return depths

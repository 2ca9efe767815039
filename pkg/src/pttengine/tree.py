"""Pentesting task tree: structure, mutation, diffing, and the leaf-only rule.

The tree is the engine's single source of truth for engagement state. Nodes
carry a free-form attribute map that always includes ``status``. Structural
comparisons are keyed by node *paths* (name chains from the root), because
trees regenerated by an LLM carry no stable ids; duplicate sibling names are
disambiguated with a positional ``#k`` suffix inside paths only.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidArgument, NotFound

NodeId = int
NodePath = tuple[str, ...]

# Reserved pseudo-attribute used by diff() to report sibling reorders on the
# parent node. Real attribute keys may not start with '#'.
ORDER_KEY = "#order"


class TaskStatus(str, Enum):
    TODO = "todo"
    IN_PROGRESS = "in-progress"
    COMPLETED = "completed"
    FAILED = "failed"
    BLOCKED = "blocked"
    NOT_APPLICABLE = "not-applicable"


STATUS_VALUES = frozenset(s.value for s in TaskStatus)


def format_path(path: NodePath) -> str:
    return " > ".join(path)


def parse_path(text: str) -> NodePath:
    return tuple(seg.strip() for seg in text.split(">") if seg.strip())


def _check_name(name: str) -> str:
    name = name.strip()
    if not name:
        raise InvalidArgument("node name must be non-empty")
    if "\n" in name or "\r" in name:
        raise InvalidArgument("node name must not span lines")
    return name


def _check_attribute(key: str, value: str) -> tuple[str, str]:
    key = key.strip()
    value = value.strip()
    if not key:
        raise InvalidArgument("attribute key must be non-empty")
    if key.startswith("#"):
        raise InvalidArgument(f"attribute key {key!r} uses the reserved '#' prefix")
    if any(c in key for c in ":]\n\r") or any(c in value for c in "]\n\r"):
        raise InvalidArgument(f"attribute {key!r} contains characters the text grammar cannot carry")
    if key == "status" and value not in STATUS_VALUES:
        raise InvalidArgument(f"unknown status {value!r}; expected one of {sorted(STATUS_VALUES)}")
    return key, value


@dataclass
class TaskNode:
    id: NodeId
    name: str
    attributes: dict[str, str]
    children: list[NodeId] = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.attributes.get("status", TaskStatus.TODO.value)


@dataclass
class Ptt:
    """Rooted attributed task tree. Mutate only through the methods below."""

    root: NodeId
    nodes: dict[NodeId, TaskNode]
    _next_id: int = 1

    # -- mutation ---------------------------------------------------------

    def add_child(self, parent: NodeId, name: str, attributes: dict[str, str] | None = None) -> NodeId:
        if parent not in self.nodes:
            raise NotFound(f"unknown parent node id {parent}")
        name = _check_name(name)
        attrs = {"status": TaskStatus.TODO.value}
        for k, v in (attributes or {}).items():
            k, v = _check_attribute(k, v)
            attrs[k] = v
        node_id = self._next_id
        self._next_id += 1
        self.nodes[node_id] = TaskNode(id=node_id, name=name, attributes=attrs)
        self.nodes[parent].children.append(node_id)
        return node_id

    def set_attribute(self, node: NodeId, key: str, value: str) -> None:
        if node not in self.nodes:
            raise NotFound(f"unknown node id {node}")
        key, value = _check_attribute(key, value)
        self.nodes[node].attributes[key] = value

    def rename(self, node: NodeId, name: str) -> None:
        if node not in self.nodes:
            raise NotFound(f"unknown node id {node}")
        self.nodes[node].name = _check_name(name)

    # -- queries ----------------------------------------------------------

    def node(self, node_id: NodeId) -> TaskNode:
        if node_id not in self.nodes:
            raise NotFound(f"unknown node id {node_id}")
        return self.nodes[node_id]

    def walk(self):
        """Yield (id, path, depth, node) depth-first, left to right."""

        def rec(node_id: NodeId, path: NodePath, depth: int):
            node = self.nodes[node_id]
            yield node_id, path, depth, node
            for seg, child in zip(child_segments(self, node), node.children):
                yield from rec(child, path + (seg,), depth + 1)

        root = self.nodes[self.root]
        yield from rec(self.root, (root.name,), 0)

    def leaves(self) -> list[tuple[NodeId, NodePath, TaskNode]]:
        return [(nid, path, node) for nid, path, _, node in self.walk() if not node.children]

    def paths(self) -> dict[NodePath, NodeId]:
        return {path: nid for nid, path, _, _ in self.walk()}

    def find(self, path: NodePath) -> NodeId:
        nid = self.paths().get(tuple(path))
        if nid is None:
            raise NotFound(f"no node at path {format_path(tuple(path))!r}")
        return nid

    def validate(self) -> None:
        """Raise InvalidArgument if the structural invariants are broken."""
        seen: set[NodeId] = set()
        parents: dict[NodeId, NodeId] = {}
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise InvalidArgument(f"node {nid} reachable twice (cycle or shared child)")
            seen.add(nid)
            node = self.nodes.get(nid)
            if node is None:
                raise InvalidArgument(f"dangling child id {nid}")
            for child in node.children:
                if child in parents:
                    raise InvalidArgument(f"node {child} has two parents")
                parents[child] = nid
                stack.append(child)
        if seen != set(self.nodes):
            raise InvalidArgument("tree has nodes unreachable from the root")
        if self.root in parents:
            raise InvalidArgument("root must not have a parent")


def new_tree(root_name: str) -> Ptt:
    """Create a tree holding a single root task with status ``todo``."""
    name = _check_name(root_name)
    root = TaskNode(id=1, name=name, attributes={"status": TaskStatus.TODO.value})
    return Ptt(root=1, nodes={1: root}, _next_id=2)


def child_segments(tree: Ptt, node: TaskNode) -> list[str]:
    """Path segments for a node's children; duplicates get a ``#k`` suffix."""
    names = [tree.nodes[c].name for c in node.children]
    counts = defaultdict(int)
    totals = defaultdict(int)
    for n in names:
        totals[n] += 1
    segs = []
    for n in names:
        counts[n] += 1
        segs.append(f"{n}#{counts[n]}" if totals[n] > 1 else n)
    return segs


def canonicalize(tree: Ptt) -> Ptt:
    """Rebuild with depth-first ids and sorted attribute keys; idempotent."""
    tree.validate()
    nodes: dict[NodeId, TaskNode] = {}
    counter = [0]

    def rec(old_id: NodeId) -> NodeId:
        counter[0] += 1
        new_id = counter[0]
        old = tree.nodes[old_id]
        attrs = {k: old.attributes[k] for k in sorted(old.attributes)}
        nodes[new_id] = TaskNode(id=new_id, name=old.name, attributes=attrs)
        nodes[new_id].children = [rec(c) for c in old.children]
        return new_id

    root = rec(tree.root)
    return Ptt(root=root, nodes=nodes, _next_id=counter[0] + 1)


def trees_equal(a: Ptt, b: Ptt) -> bool:
    """Canonical equality: same shape, names, attributes, and child order."""
    return canonicalize(a) == canonicalize(b)


# -- structural diff -------------------------------------------------------


@dataclass(frozen=True)
class AttributeChange:
    path: NodePath
    key: str
    old: str | None
    new: str | None


@dataclass
class TreeDiff:
    added: list[NodePath] = field(default_factory=list)
    removed: list[NodePath] = field(default_factory=list)
    attribute_changed: list[AttributeChange] = field(default_factory=list)
    renamed: list[tuple[NodePath, NodePath]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.attribute_changed or self.renamed)

    def describe(self) -> str:
        lines = []
        for p in self.removed:
            lines.append(f"removed: {format_path(p)}")
        for p in self.added:
            lines.append(f"added: {format_path(p)}")
        for old, new in self.renamed:
            lines.append(f"renamed: {format_path(old)} -> {format_path(new)}")
        for c in self.attribute_changed:
            lines.append(f"changed: {format_path(c.path)} [{c.key}: {c.old!r} -> {c.new!r}]")
        return "\n".join(lines)


def _subtree_paths(tree: Ptt, node_id: NodeId, base: NodePath) -> list[NodePath]:
    node = tree.nodes[node_id]
    out = [base]
    for seg, child in zip(child_segments(tree, node), node.children):
        out.extend(_subtree_paths(tree, child, base + (seg,)))
    return out


def diff(old: Ptt, new: Ptt) -> TreeDiff:
    """Structural change set between two trees, matched by node path.

    Children are paired per parent by name (k-th occurrence to k-th
    occurrence, so duplicate siblings stay aligned). A rename is reported only
    when exactly one child name changed under an otherwise unchanged parent;
    anything more ambiguous becomes removed + added. Sibling reorders surface
    as a synthetic ``#order`` attribute change on the parent, which keeps an
    empty diff equivalent to canonical equality.
    """
    old_c = canonicalize(old)
    new_c = canonicalize(new)
    d = TreeDiff()
    o_root = old_c.nodes[old_c.root]
    n_root = new_c.nodes[new_c.root]
    o_path: NodePath = (o_root.name,)
    n_path: NodePath = (n_root.name,)
    renamed_root = o_root.name != n_root.name
    if renamed_root:
        d.renamed.append((o_path, n_path))
    _match(d, old_c, new_c, o_root, n_root, o_path, n_path, renamed=renamed_root)
    return d


def _match(d: TreeDiff, old_t: Ptt, new_t: Ptt, o_node: TaskNode, n_node: TaskNode,
           o_path: NodePath, n_path: NodePath, renamed: bool) -> None:
    # A renamed node already counts as changed; skip its attribute detail so
    # the diff lists stay disjoint by path.
    if not renamed:
        for key in sorted(set(o_node.attributes) | set(n_node.attributes)):
            ov = o_node.attributes.get(key)
            nv = n_node.attributes.get(key)
            if ov != nv:
                d.attribute_changed.append(AttributeChange(o_path, key, ov, nv))

    o_segs = child_segments(old_t, o_node)
    n_segs = child_segments(new_t, n_node)
    o_kids = [old_t.nodes[c] for c in o_node.children]
    n_kids = [new_t.nodes[c] for c in n_node.children]

    new_by_name: dict[str, list[int]] = defaultdict(list)
    for j, kid in enumerate(n_kids):
        new_by_name[kid.name].append(j)
    pairs: dict[int, int] = {}
    occurrence: dict[str, int] = defaultdict(int)
    for i, kid in enumerate(o_kids):
        k = occurrence[kid.name]
        occurrence[kid.name] += 1
        slots = new_by_name.get(kid.name, [])
        if k < len(slots):
            pairs[i] = slots[k]

    unmatched_old = [i for i in range(len(o_kids)) if i not in pairs]
    matched_new = set(pairs.values())
    unmatched_new = [j for j in range(len(n_kids)) if j not in matched_new]

    # Single changed child name under an unchanged parent -> rename.
    if (
        len(o_kids) == len(n_kids)
        and len(unmatched_old) == 1
        and len(unmatched_new) == 1
        and unmatched_old[0] == unmatched_new[0]
        and all(pairs[i] == i for i in pairs)
    ):
        i = unmatched_old[0]
        rename_old = o_path + (o_segs[i],)
        rename_new = n_path + (n_segs[i],)
        d.renamed.append((rename_old, rename_new))
        pairs[i] = i
        unmatched_old = []
        unmatched_new = []
        _match(d, old_t, new_t, o_kids[i], n_kids[i], rename_old, rename_new, renamed=True)
        rename_index = i
    else:
        rename_index = None

    for i in unmatched_old:
        d.removed.extend(_subtree_paths(old_t, o_node.children[i], o_path + (o_segs[i],)))
    for j in unmatched_new:
        d.added.extend(_subtree_paths(new_t, n_node.children[j], n_path + (n_segs[j],)))

    matched_order = sorted(pairs)
    new_positions = [pairs[i] for i in matched_order]
    if new_positions != sorted(new_positions):
        d.attribute_changed.append(AttributeChange(
            o_path, ORDER_KEY,
            "|".join(o_segs[i] for i in matched_order),
            "|".join(n_segs[j] for j in sorted(new_positions)),
        ))

    for i in matched_order:
        if i == rename_index:
            continue
        j = pairs[i]
        _match(d, old_t, new_t, o_kids[i], n_kids[j],
               o_path + (o_segs[i],), n_path + (n_segs[j],), renamed=False)


# -- leaf-only verification -------------------------------------------------


class ViolationKind(str, Enum):
    INTERNAL_MODIFIED = "internal-modified"
    NODE_REMOVED = "node-removed"
    INTERNAL_RENAMED = "internal-renamed"
    ADDED_UNDER_INTERNAL = "added-under-internal"


@dataclass
class VerificationReport:
    ok: bool
    violations: list[tuple[NodePath, ViolationKind]]

    def describe(self) -> str:
        return "\n".join(f"{kind.value}: {format_path(path)}" for path, kind in self.violations)


def verify_leaf_only(old: Ptt, d: TreeDiff) -> VerificationReport:
    """Check a diff against the leaf-only edit rule.

    Legal edits are exactly attribute changes on nodes that were leaves of
    ``old`` and subtrees attached beneath nodes that were leaves of ``old``
    (a former leaf may become internal that way). Everything else is a
    violation: removals, renames, attribute changes on internal nodes, and
    additions whose nearest pre-existing ancestor was internal.
    """
    old_c = canonicalize(old)
    all_paths = set(old_c.paths())
    leaf_paths = {path for _, path, _ in old_c.leaves()}
    violations: list[tuple[NodePath, ViolationKind]] = []

    for path in d.removed:
        violations.append((path, ViolationKind.NODE_REMOVED))
    for old_path, _new_path in d.renamed:
        violations.append((old_path, ViolationKind.INTERNAL_RENAMED))
    for change in d.attribute_changed:
        if change.path not in leaf_paths:
            violations.append((change.path, ViolationKind.INTERNAL_MODIFIED))
    for path in d.added:
        anchor = None
        for cut in range(len(path) - 1, 0, -1):
            if path[:cut] in all_paths:
                anchor = path[:cut]
                break
        if anchor is None or anchor not in leaf_paths:
            violations.append((path, ViolationKind.ADDED_UNDER_INTERNAL))

    return VerificationReport(ok=not violations, violations=violations)

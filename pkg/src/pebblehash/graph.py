"""Immutable bounded in-degree DAG with designated sources and targets."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

MAGIC = "PGRAPH1"


class GraphError(ValueError):
    """Raised for malformed graphs or graph files."""


@dataclass(frozen=True, eq=False)
class Dag:
    node_count: int
    edges: tuple[tuple[int, int], ...]
    sources: tuple[int, ...]
    targets: tuple[int, ...]
    max_in_degree: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted((int(u), int(v)) for u, v in self.edges)))
        object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return (self.node_count, self.edges, self.sources, self.targets, self.max_in_degree) == (
            other.node_count, other.edges, other.sources, other.targets, other.max_in_degree)

    def __hash__(self):
        return hash((self.node_count, self.edges, self.sources, self.targets, self.max_in_degree))

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return (f"<Dag{label} n={self.node_count} m={len(self.edges)} "
                f"|S|={len(self.sources)} |T|={len(self.targets)}>")

    @cached_property
    def preds(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            if 0 <= v < self.node_count:
                out[v].append(u)
        return tuple(tuple(sorted(p)) for p in out)

    @cached_property
    def succs(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            if 0 <= u < self.node_count:
                out[u].append(v)
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def pred_masks(self) -> tuple[int, ...]:
        """Predecessor sets as integer bitmasks, for the solvers."""
        masks = []
        for p in self.preds:
            m = 0
            for u in p:
                m |= 1 << u
            masks.append(m)
        return tuple(masks)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def predecessors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.node_count:
            raise IndexError(f"node {v} out of range 0..{self.node_count - 1}")
        return self.preds[v]

    def successors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.node_count:
            raise IndexError(f"node {v} out of range 0..{self.node_count - 1}")
        return self.succs[v]

    @cached_property
    def depths(self) -> tuple[int, ...]:
        """Longest path (in nodes) ending at each node; sources have depth 1."""
        d = [1] * self.node_count
        for v in range(self.node_count):
            for u in self.preds[v]:
                d[v] = max(d[v], d[u] + 1)
        return tuple(d)

    @property
    def depth(self) -> int:
        return max(self.depths, default=0)

    def ancestors(self, nodes: Iterable[int]) -> set[int]:
        seen: set[int] = set()
        stack = list(nodes)
        while stack:
            v = stack.pop()
            for u in self.preds[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def descendants(self, nodes: Iterable[int]) -> set[int]:
        seen: set[int] = set()
        stack = list(nodes)
        while stack:
            v = stack.pop()
            for w in self.succs[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen


def make_dag(node_count: int, edges: Iterable[tuple[int, int]], targets: Sequence[int],
             max_in_degree: int = 2, name: str = "") -> Dag:
    """Build a Dag whose sources are derived from the edge list."""
    edges = sorted(set(edges))
    has_pred = {v for _, v in edges}
    sources = [v for v in range(node_count) if v not in has_pred]
    return Dag(node_count, tuple(edges), tuple(sources), tuple(targets), max_in_degree, name)


def validate(d: Dag) -> str | None:
    """Return None when every Dag invariant holds, else the first violation."""
    n = d.node_count
    if n < 1:
        return "empty graph"
    seen = set()
    for u, v in d.edges:
        if not (0 <= u < n and 0 <= v < n):
            return f"dangling edge ({u},{v})"
        if (u, v) in seen:
            return f"duplicate edge ({u},{v})"
        seen.add((u, v))
    # Kahn's algorithm on the raw edges so cycles are reported as such.
    indeg = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in d.edges:
        indeg[v] += 1
        adj[u].append(v)
    queue = deque(v for v in range(n) if indeg[v] == 0)
    done = 0
    rem = indeg[:]
    while queue:
        u = queue.popleft()
        done += 1
        for v in adj[u]:
            rem[v] -= 1
            if rem[v] == 0:
                queue.append(v)
    if done != n:
        return "cycle"
    for u, v in d.edges:
        if u >= v:
            return f"edge ({u},{v}) not in topological index order"
    for v in range(n):
        if indeg[v] > d.max_in_degree:
            return f"node {v} has in-degree {indeg[v]} > {d.max_in_degree}"
    expected = tuple(v for v in range(n) if indeg[v] == 0)
    if tuple(d.sources) != expected:
        return f"sources {list(d.sources)} differ from in-degree-0 nodes {list(expected)}"
    if not d.targets:
        return "empty target set"
    for t in d.targets:
        if not 0 <= t < n:
            return f"target {t} out of range"
    if len(set(d.targets)) != len(d.targets):
        return "duplicate target"
    return None


def serialize(d: Dag) -> bytes:
    lines = [f"{MAGIC} {d.node_count} {len(d.edges)} {d.max_in_degree}",
             "S" + "".join(f" {s}" for s in d.sources),
             "T" + "".join(f" {t}" for t in d.targets)]
    lines.extend(f"{u} {v}" for u, v in d.edges)
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> Dag:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 3:
        raise GraphError("truncated graph file: missing header lines")
    head = lines[0].split()
    if len(head) != 4 or head[0] != MAGIC:
        raise GraphError(f"malformed header: {lines[0]!r}")
    try:
        n, m, k = (int(x) for x in head[1:])
    except ValueError:
        raise GraphError(f"malformed header: {lines[0]!r}") from None

    def index_line(line: str, tag: str) -> tuple[int, ...]:
        parts = line.split()
        if not parts or parts[0] != tag:
            raise GraphError(f"expected '{tag}' line, got {line!r}")
        try:
            return tuple(int(x) for x in parts[1:])
        except ValueError:
            raise GraphError(f"bad index in {line!r}") from None

    sources = index_line(lines[1], "S")
    targets = index_line(lines[2], "T")
    body = lines[3:]
    if len(body) != m:
        raise GraphError(f"expected {m} edges, found {len(body)}")
    edges = []
    for line in body:
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"bad edge line {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphError(f"bad edge line {line!r}") from None
    return Dag(n, tuple(edges), sources, targets, k)

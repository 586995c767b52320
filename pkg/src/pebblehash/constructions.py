"""Deterministic generators for the graph families used throughout the package.

Every generator numbers nodes in a fixed topological order, documented
per family, so that labels and serialized graphs are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .graph import Dag, GraphError, make_dag

FAMILIES = ("pyramid", "cylinder", "composite-binary-tree", "time-optimal",
            "layered-transform", "cc-alpha-crossover", "path")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GraphError(msg)


def path(n: int) -> Dag:
    """A directed path 0 -> 1 -> ... -> n-1 with the last node as target."""
    _require(n >= 1, "path needs n >= 1")
    return make_dag(n, [(i, i + 1) for i in range(n - 1)], [n - 1], name=f"path({n})")


def pyramid_index(h: int, level: int, j: int) -> int:
    """Index of node j on 1-based level `level` of pyramid(h) (level 1 = base)."""
    before = sum(h - k + 1 for k in range(1, level))
    return before + j


def pyramid(h: int) -> Dag:
    """Height-h pyramid: base of h sources, apex is the single target.

    Numbering is level by level from the base, left to right.
    """
    _require(h >= 1, "pyramid height must be >= 1")
    edges = []
    for level in range(2, h + 1):
        for j in range(h - level + 1):
            v = pyramid_index(h, level, j)
            edges.append((pyramid_index(h, level - 1, j), v))
            edges.append((pyramid_index(h, level - 1, j + 1), v))
    n = h * (h + 1) // 2
    return make_dag(n, edges, [n - 1], name=f"pyramid({h})")


def cylinder(h: int, levels: int | None = None) -> Dag:
    """Cylinder with `levels` (default 2h) levels of h nodes and wraparound diagonals.

    Node v_i^j has index i*h + j. Level 0 holds the sources, the top level
    the h targets. For h = 1 the two edge rules coincide and are merged,
    which makes the graph a degenerate path.
    """
    _require(h >= 1, "cylinder height must be >= 1")
    levels = 2 * h if levels is None else levels
    _require(levels >= 1, "cylinder needs at least one level")
    edges = set()
    for i in range(levels - 1):
        for j in range(h):
            u = i * h + j
            edges.add((u, (i + 1) * h + j))
            edges.add((u, (i + 1) * h + (j + 1) % h))
    n = levels * h
    tag = "" if levels == 2 * h else f",levels={levels}"
    name = f"cylinder({h}{tag})" + (" degenerate" if h == 1 else "")
    return make_dag(n, edges, list(range(n - h, n)), name=name)


def is_degenerate_cylinder(d: Dag) -> bool:
    return d.name.startswith("cylinder(1")


def composite_binary_tree(h: int, s: int) -> Dag:
    """s+1 heap-shaped binary in-trees of 2^(h-1) nodes each, plus s joining targets.

    A heap of 2^(h-1) nodes has height exactly h. Trees occupy consecutive
    blocks with children numbered before parents; target s_i joins roots
    r_i and r_{i+1}.
    """
    _require(h >= 1 and s >= 1, "composite binary tree needs h >= 1 and s >= 1")
    m = 2 ** (h - 1)
    edges = []
    roots = []
    for t in range(s + 1):
        base = t * m

        def idx(heap_pos: int) -> int:
            return base + (m - 1 - heap_pos)

        for k in range(1, m):
            edges.append((idx(k), idx((k - 1) // 2)))
        roots.append(idx(0))
    n = (s + 1) * m + s
    targets = []
    for i in range(s):
        x = (s + 1) * m + i
        edges.append((roots[i], x))
        edges.append((roots[i + 1], x))
        targets.append(x)
    return make_dag(n, edges, targets, name=f"composite-binary-tree({h},{s})")


@dataclass(frozen=True)
class TimeOptimal:
    dag: Dag
    roots: dict[int, int]          # i -> r_i for i in [2, s]
    path_nodes: tuple[int, ...]    # v_1 .. v_{c1 s}
    tail_nodes: tuple[int, ...]    # w_1 .. w_{s-1}

    @property
    def x_set(self) -> tuple[int, ...]:
        """The cut {r_2..r_s, v_{c1 s}} used by the layering transform."""
        return tuple(sorted(set(self.roots.values()) | {self.path_nodes[-1]}))


def time_optimal_layout(s: int, c1: int = 2) -> TimeOptimal:
    """Pyramid with per-level paths, followed by a root-fed path and a tail.

    Level paths run left to right, so interior nodes of upper levels get a
    third predecessor; each such node becomes the apex of a 6-node height-3
    pyramid gadget whose base nodes copy its three inputs. Subpyramid roots
    are the rightmost node of each level (see the decisions ledger).
    """
    _require(s >= 2, "time-optimal construction needs s >= 2")
    _require(c1 >= 2, "time-optimal construction needs c1 >= 2")
    edges: list[tuple[int, int]] = []
    counter = 0

    def new() -> int:
        nonlocal counter
        counter += 1
        return counter - 1

    level_nodes: list[list[int]] = []
    for level in range(1, s + 1):
        row: list[int] = []
        for j in range(s - level + 1):
            inputs = []
            if level > 1:
                below = level_nodes[-1]
                inputs += [below[j], below[j + 1]]
            if j > 0:
                inputs.append(row[j - 1])
            inputs.sort()
            if len(inputs) == 3:
                g = [new() for _ in range(3)]
                for src, dst in zip(inputs, g):
                    edges.append((src, dst))
                m0, m1 = new(), new()
                edges += [(g[0], m0), (g[1], m0), (g[1], m1), (g[2], m1)]
                v = new()
                edges += [(m0, v), (m1, v)]
            else:
                v = new()
                edges += [(u, v) for u in inputs]
            row.append(v)
        level_nodes.append(row)
    roots = {i: level_nodes[i - 1][-1] for i in range(2, s + 1)}

    vs = []
    for q in range(1, c1 * s + 1):
        v = new()
        if q == 1:
            edges.append((roots[s], v))
        else:
            edges.append((vs[-1], v))
            edges.append((roots[(q - 2) % (s - 1) + 2], v))
        vs.append(v)
    ws = []
    for l in range(1, s):
        w = new()
        edges.append((vs[-1] if l == 1 else ws[-1], w))
        edges.append((roots[l + 1], w))
        ws.append(w)
    dag = make_dag(counter, edges, [ws[-1]], name=f"time-optimal({s},{c1})")
    return TimeOptimal(dag, roots, tuple(vs), tuple(ws))


def time_optimal(s: int, c1: int = 2) -> Dag:
    return time_optimal_layout(s, c1).dag


def layer_transform(g: Dag, s: int, x_set: Iterable[int]) -> Dag:
    """Append s-1 copies of X and its descendants, fed by the original outside nodes."""
    _require(s >= 1, "layering needs s >= 1")
    _require(len(g.targets) == 1, "layering requires a single-target graph")
    x = set(x_set)
    _require(bool(x), "X must be non-empty")
    _require(all(0 <= v < g.node_count for v in x), "X contains an out-of-range node")
    dset = g.descendants(x) - x
    block = sorted(x | dset)
    (target,) = g.targets
    _require(target in x or target in dset, "target is not reachable from X")
    inside = set(block)
    edges = list(g.edges)
    targets = [target]
    n = g.node_count
    for _ in range(s - 1):
        copy = {v: n + i for i, v in enumerate(block)}
        for a, b in g.edges:
            if b in inside:
                edges.append((copy[a] if a in inside else a, copy[b]))
        targets.append(copy[target])
        n += len(block)
    name = f"layered({g.name or 'g'},s={s})"
    return make_dag(n, edges, targets, max_in_degree=g.max_in_degree, name=name)


def floor_power(n: int, x: Fraction) -> int:
    """Exact floor(n ** x) for a rational exponent x >= 0."""
    x = Fraction(x)
    p, q = x.numerator, x.denominator
    target = n ** p
    guess = int(round(float(n) ** float(x)))
    m = max(guess, 0)
    while m ** q > target:
        m -= 1
    while (m + 1) ** q <= target:
        m += 1
    return m


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str) and "/" in v:
        return Fraction(v)
    return Fraction(str(v)).limit_denominator(10 ** 6)


@dataclass(frozen=True)
class Crossover:
    dag: Dag
    na: int
    nb: int
    a_nodes: tuple[int, ...]
    c_nodes: tuple[int, ...]
    junctions: tuple[int, ...]          # A nodes feeding C, in path order
    cross: dict[int, int] = field(default_factory=dict)   # C node -> its junction


def cc_alpha_crossover_layout(n: int, a, b, c) -> Crossover:
    """Path through A (n^a * n^b nodes), bridge, path through C, plus cross edges.

    A occupies indices 0..|A|-1 and C follows. |C| = floor(n^c) rounded down
    to a multiple of n^a so the cross-edge pattern tiles exactly.
    """
    a, b, c = as_fraction(a), as_fraction(b), as_fraction(c)
    for name, e in (("a", a), ("b", b), ("c", c)):
        _require(0 <= e < 1, f"exponent {name} must lie in [0, 1)")
    _require(b + c > a + 1, "need b + c > a + 1")
    _require(a < b and a < c, "need a < b and a < c")
    na, nb, nc = floor_power(n, a), floor_power(n, b), floor_power(n, c)
    _require(na >= 2 and nb >= 1, f"n={n} too small: n^a={na} must be at least 2, n^b={nb}")
    size_a = na * nb
    size_c = nc - nc % na
    _require(size_c >= na, f"n={n} too small: C would be empty")
    edges = [(i, i + 1) for i in range(size_a - 1)]
    edges += [(i, i + 1) for i in range(size_a, size_a + size_c - 1)]
    edges.append((size_a - 1, size_a))
    cross = {}
    for k in range(nb, size_a + 1, nb):
        for q in range(1, size_c // na + 1):
            l = size_a + k // nb + (q - 1) * na
            edges.append((k - 1, l - 1))
            cross[l - 1] = k - 1
    total = size_a + size_c
    dag = make_dag(total, edges, [total - 1], name=f"cc-alpha-crossover({n},{a},{b},{c})")
    return Crossover(dag, na, nb, tuple(range(size_a)), tuple(range(size_a, total)),
                     tuple(k - 1 for k in range(nb, size_a + 1, nb)), cross)


def cc_alpha_crossover(n: int, a, b, c) -> Dag:
    return cc_alpha_crossover_layout(n, a, b, c).dag


@dataclass(frozen=True)
class ConstructionParams:
    family: str
    h_or_s: int = 2
    a: Fraction | None = None
    b: Fraction | None = None
    c: Fraction | None = None
    c1: int = 2
    targets: int = 1           # composite-binary-tree target count
    levels: int | None = None  # cylinder level override
    n: int | None = None       # cc-alpha-crossover size

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GraphError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, as_fraction(v))

    def canonical(self) -> str:
        """Stable text form, used for table digests."""
        doc = {"family": self.family, "h_or_s": self.h_or_s, "c1": self.c1,
               "targets": self.targets, "levels": self.levels, "n": self.n,
               "a": str(self.a) if self.a is not None else None,
               "b": str(self.b) if self.b is not None else None,
               "c": str(self.c) if self.c is not None else None}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def build(p: ConstructionParams) -> Dag:
    f = p.family
    if f == "pyramid":
        return pyramid(p.h_or_s)
    if f == "cylinder":
        return cylinder(p.h_or_s, p.levels)
    if f == "path":
        return path(p.h_or_s)
    if f == "composite-binary-tree":
        return composite_binary_tree(p.h_or_s, p.targets)
    if f == "time-optimal":
        return time_optimal(p.h_or_s, p.c1)
    if f == "layered-transform":
        lay = time_optimal_layout(p.h_or_s, p.c1)
        return layer_transform(lay.dag, p.h_or_s, lay.x_set)
    if f == "cc-alpha-crossover":
        _require(None not in (p.a, p.b, p.c), "crossover needs a, b and c")
        return cc_alpha_crossover(p.n if p.n is not None else p.h_or_s, p.a, p.b, p.c)
    raise GraphError(f"unknown family {f!r}")


def expected_node_count(p: ConstructionParams) -> int | None:
    """Closed-form node counts where the family has one."""
    h = p.h_or_s
    if p.family == "pyramid":
        return h * (h + 1) // 2
    if p.family == "cylinder":
        return h * (p.levels if p.levels is not None else 2 * h)
    if p.family == "composite-binary-tree":
        return (p.targets + 1) * 2 ** (h - 1) + p.targets
    return None


def layered_node_count(g: Dag, s: int, x_set: Sequence[int]) -> int:
    x = set(x_set)
    dset = g.descendants(x) - x
    return g.node_count + (s - 1) * (len(dset) + len(x))

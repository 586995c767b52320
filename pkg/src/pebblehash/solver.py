"""Exhaustive minimum-space solvers and the named pebbling strategies.

Configurations are encoded as integer bitmasks. Searches deepen on the
pebble bound k and run a breadth-first reachability search over
(configuration, visited-targets) states for each k.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .constructions import Crossover
from .engine import (PARALLEL, SEQUENTIAL, EMPTY, MagicConfig, PebblingStrategy, _check_mode,
                     pcc_from_histogram, validate)
from .graph import Dag


class BudgetExceeded(RuntimeError):
    """The search ran out of budget; ``lower_bound`` is still proven."""

    def __init__(self, message: str, lower_bound: int):
        super().__init__(message)
        self.lower_bound = lower_bound


@dataclass(frozen=True)
class SearchBudget:
    max_pebbles: int | None = None
    max_states: int = 5_000_000
    max_seconds: float = 600.0

    def __post_init__(self):
        for name in ("max_pebbles", "max_states", "max_seconds"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveResult:
    space: int
    witness: PebblingStrategy
    states: int = 0
    note: str = ""


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def _to_set(mask: int) -> frozenset:
    return frozenset(_bits(mask))


class _Clock:
    def __init__(self, budget: SearchBudget, lower: int):
        self.budget = budget
        self.start = time.monotonic()
        self.states = 0
        self.lower = lower

    def tick(self, n: int = 1) -> None:
        self.states += n
        if self.states > self.budget.max_states:
            raise BudgetExceeded(f"state budget {self.budget.max_states} exhausted", self.lower)
        if self.states % 4096 == 0 and time.monotonic() - self.start > self.budget.max_seconds:
            raise BudgetExceeded(f"time budget {self.budget.max_seconds}s exhausted", self.lower)


def _bfs(start, successors: Callable, is_goal: Callable, clock: _Clock):
    """Plain BFS; returns the state path to the first goal or None."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in successors(s):
            if t in parent:
                continue
            parent[t] = s
            clock.tick()
            if is_goal(t):
                path = [t]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(t)
    return None


# -- standard game ----------------------------------------------------------

class _Graph:
    """Bitmask views of a Dag used by the searches."""

    def __init__(self, d: Dag, targets):
        self.d = d
        self.n = d.node_count
        self.pm = d.pred_masks
        self.tmask = _mask(d.targets if targets is None else targets)
        self.all = (1 << self.n) - 1

    def addable(self, pebbled: int) -> int:
        out = 0
        for v in range(self.n):
            if not (pebbled >> v) & 1 and self.pm[v] & pebbled == self.pm[v]:
                out |= 1 << v
        return out


def _std_successors(g: _Graph, k: int, mode: str, slides: bool):
    def seq(state):
        p, vis = state
        size = p.bit_count()
        for u in _bits(p):
            yield p & ~(1 << u), vis
        add = g.addable(p)
        for v in _bits(add):
            bit = 1 << v
            if size + 1 <= k:
                q = p | bit
                yield q, vis | (q & g.tmask)
            if slides:
                for u in _bits(g.pm[v] & p):
                    q = (p | bit) & ~(1 << u)
                    yield q, vis | (q & g.tmask)

    def par(state):
        p, vis = state
        add = g.addable(p)
        cand = list(_bits(p | add))
        for r in range(0, min(k, len(cand)) + 1):
            for combo in itertools.combinations(cand, r):
                q = _mask(combo)
                if q == p:
                    continue
                if not slides:
                    new = q & ~p
                    if any(g.pm[v] & q != g.pm[v] for v in _bits(new)):
                        continue
                yield q, vis | (q & g.tmask)

    return seq if mode == SEQUENTIAL else par


def _reaches_goal(g: _Graph, k: int, mode: str, slides: bool, clock: _Clock):
    start = (0, 0)
    if g.tmask == 0:
        return [start]
    succ = _std_successors(g, k, mode, slides)
    return _bfs(start, succ, lambda s: s[1] == g.tmask, clock)


def min_space_standard(d: Dag, targets=None, mode: str = SEQUENTIAL,
                       budget: SearchBudget | None = None, slides: bool = True) -> SolveResult:
    """Smallest peak pebble count of any valid standard strategy (visiting goal)."""
    _check_mode(mode)
    budget = budget or SearchBudget()
    g = _Graph(d, targets)
    top = budget.max_pebbles or d.node_count
    clock = _Clock(budget, 1)
    for k in range(1, top + 1):
        clock.lower = k
        path = _reaches_goal(g, k, mode, slides, clock)
        if path is not None:
            strat = PebblingStrategy.standard(_to_set(p) for p, _ in path)
            return SolveResult(k, strat, clock.states)
    raise BudgetExceeded(f"no strategy with at most {top} pebbles", top + 1)


def min_sustained_standard(d: Dag, lam: int, k: int, targets=None, mode: str = PARALLEL,
                           budget: SearchBudget | None = None,
                           slides: bool = True) -> tuple[int, PebblingStrategy]:
    """Fewest steps holding >= lam pebbles over strategies with peak <= k (0-1 BFS)."""
    _check_mode(mode)
    budget = budget or SearchBudget()
    g = _Graph(d, targets)
    clock = _Clock(budget, 0)
    succ = _std_successors(g, k, mode, slides)
    start = (0, 0)
    dist = {start: 0}
    parent = {start: None}
    dq = deque([start])
    done = set()
    while dq:
        s = dq.popleft()
        if s in done:
            continue
        done.add(s)
        if s[1] == g.tmask:
            path = [s]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            strat = PebblingStrategy.standard(_to_set(p) for p, _ in reversed(path))
            return dist[s], strat
        for t in succ(s):
            w = 1 if t[0].bit_count() >= lam else 0
            nd = dist[s] + w
            if nd < dist.get(t, 1 << 60):
                dist[t] = nd
                parent[t] = s
                clock.tick()
                if w:
                    dq.append(t)
                else:
                    dq.appendleft(t)
    raise BudgetExceeded(f"no strategy with peak <= {k}", 0)


# -- black-magic game -------------------------------------------------------

def _magic_successors(g: _Graph, k: int, mb: int, mode: str, slides: bool, prune: bool):
    """States are (black, magic, ever_magic, visited) masks."""
    cap = min(mb, k)

    def seq(state):
        b, m, e, vis = state
        p = b | m
        size = p.bit_count()
        for u in _bits(b):
            yield b & ~(1 << u), m, e, vis
        for u in _bits(m):
            yield b, m & ~(1 << u), e, vis
        add = g.addable(p)
        for v in _bits(add):
            bit = 1 << v
            if size + 1 <= k:
                nb = b | bit
                yield nb, m, e, vis | (bit & g.tmask)
            if slides:
                for u in _bits(g.pm[v] & p):
                    ub = 1 << u
                    yield (b | bit) & ~ub, m & ~ub, e, vis | (bit & g.tmask)
        if size + 1 <= k and e.bit_count() < cap:
            free = g.all & ~p & ~e
            for u in _bits(free):
                bit = 1 << u
                yield b, m | bit, e | bit, vis | (bit & g.tmask)

    def par(state):
        b, m, e, vis = state
        p = b | m
        add = g.addable(p)
        cand = list(_bits(p | add))
        seen = set()
        for r in range(0, min(k, len(cand)) + 1):
            for combo in itertools.combinations(cand, r):
                kmask = _mask(combo)
                nb = (kmask & b) | (kmask & add)
                nm = kmask & m
                if not slides:
                    new = nb & ~b
                    if any(g.pm[v] & kmask != g.pm[v] for v in _bits(new)):
                        continue
                room = min(k - r, cap - e.bit_count())
                for extra in _magic_options(g, kmask, e, vis, room, prune):
                    q = (nb, nm | extra, e | extra)
                    if q in seen:
                        continue
                    seen.add(q)
                    if nb == b and nm | extra == m:
                        continue
                    yield nb, nm | extra, e | extra, vis | ((nb | nm | extra) & g.tmask)

    return seq if mode == SEQUENTIAL else par


def _magic_options(g: _Graph, base: int, ever: int, vis: int, room: int, prune: bool):
    """Sets of fresh magic pebbles that may join the configuration `base`.

    With pruning only sets that are unions of (a) unvisited targets and
    (b) the missing predecessors of some node are produced. Any valid
    parallel strategy can be rewritten so that each magic pebble is placed
    one move before its first use, so nothing optimal is lost.
    """
    yield 0
    if room <= 0:
        return
    blocked = base | ever
    if not prune:
        free = list(_bits(g.all & ~blocked))
        for r in range(1, min(room, len(free)) + 1):
            for combo in itertools.combinations(free, r):
                yield _mask(combo)
        return
    opts = set()
    for t in _bits(g.tmask & ~vis & ~blocked):
        opts.add(1 << t)
    for w in range(g.n):
        if (base >> w) & 1:
            continue
        miss = g.pm[w] & ~base
        if miss and not miss & ever and miss.bit_count() <= room:
            opts.add(miss)
    opts = sorted(opts)
    produced = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for cur in frontier:
            for o in opts:
                u = cur | o
                if u != cur and u not in produced and u.bit_count() <= room:
                    produced.add(u)
                    nxt.append(u)
                    yield u
        frontier = nxt


def _magic_strategy(path, bound) -> PebblingStrategy:
    return PebblingStrategy.magic(((_to_set(b), _to_set(m)) for b, m, _, _ in path), bound)


def _trivial_magic(d: Dag, targets, bound) -> PebblingStrategy:
    """One magic pebble per target, each dropped when the next is placed."""
    t = sorted(d.targets if targets is None else targets)
    return PebblingStrategy.magic([(EMPTY, frozenset([v])) for v in t], bound)


def _magic_reaches(g: _Graph, k: int, mb: int, mode: str, slides: bool, prune: bool, clock):
    start = (0, 0, 0, 0)
    succ = _magic_successors(g, k, mb, mode, slides, prune)
    return _bfs(start, succ, lambda s: s[3] == g.tmask, clock)


def min_space_magic(d: Dag, targets=None, mbound: int | None = None, mode: str = PARALLEL,
                    budget: SearchBudget | None = None, slides: bool = True,
                    prune: bool = True) -> SolveResult:
    """Smallest max(m(P), peak) over valid black-magic strategies with at most
    ``mbound`` magic pebbles (unbounded when None).

    Each bound k is refuted exhaustively before k+1 is tried; at a given k a
    cheap known strategy (all targets magic) is accepted before searching.
    """
    _check_mode(mode)
    budget = budget or SearchBudget()
    g = _Graph(d, targets)
    tset = d.targets if targets is None else tuple(targets)
    mb = d.node_count if mbound is None else mbound
    top = budget.max_pebbles or d.node_count
    clock = _Clock(budget, 1)
    if g.tmask == 0:
        return SolveResult(0, PebblingStrategy.magic([], mbound), 0)
    for k in range(1, top + 1):
        clock.lower = k
        if len(tset) <= min(k, mb):
            return SolveResult(k, _trivial_magic(d, tset, mbound), clock.states,
                               note="all-targets-magic witness")
        path = _magic_reaches(g, k, mb, mode, slides, prune, clock)
        if path is not None:
            return SolveResult(k, _magic_strategy(path, mbound), clock.states)
    raise BudgetExceeded(f"no magic strategy with space at most {top}", top + 1)


@dataclass
class HardnessRow:
    subset: tuple[int, ...]
    magic_budget: int
    needed: int              # |T|
    found_space: int | None  # a strategy below |T| if one exists
    holds: bool
    states: int


def incremental_hardness(d: Dag, mbound: int = 0, sizes: Iterable[int] | None = None,
                         mode: str = PARALLEL, budget: SearchBudget | None = None) -> list[HardnessRow]:
    """Check P_s(G, |C|-1, C) >= |T| for every target subset C with |C| > mbound.

    Only bounds below |T| need refuting, so each search is capped at |T|-1.
    """
    budget = budget or SearchBudget()
    tlist = list(d.targets)
    need = len(tlist)
    allowed = set(range(1, need + 1)) if sizes is None else set(sizes)
    rows = []
    for r in range(1, need + 1):
        if r <= mbound or r not in allowed:
            continue
        for subset in itertools.combinations(tlist, r):
            capped = SearchBudget(max_pebbles=max(1, need - 1), max_states=budget.max_states,
                                  max_seconds=budget.max_seconds)
            try:
                res = min_space_magic(d, subset, r - 1, mode, capped)
                found, states = res.space, res.states
            except BudgetExceeded as exc:
                if exc.lower_bound < need:
                    raise
                found, states = None, 0
            ok = found is None or found >= need
            rows.append(HardnessRow(tuple(subset), r - 1, need, found, ok, states))
    return rows


# -- named strategies ---------------------------------------------------------

def wavefront_cylinder(h: int, levels: int | None = None) -> PebblingStrategy:
    """Parallel sweep holding one full level at a time; every level slides up at once."""
    if h < 1:
        raise ValueError("h must be >= 1")
    levels = 2 * h if levels is None else levels
    return PebblingStrategy.standard(range(i * h, (i + 1) * h) for i in range(levels))


def trivial_sweep(d: Dag) -> PebblingStrategy:
    """Keep-everything parallel sweep: step t pebbles every node of depth t."""
    depths = d.depths
    out, cur = [], set()
    for t in range(1, d.depth + 1):
        cur |= {v for v in range(d.node_count) if depths[v] == t}
        out.append(frozenset(cur))
    return PebblingStrategy.standard(out)


def p2_linear_time(x: Crossover) -> PebblingStrategy:
    """One topological sweep, parking a pebble on every junction of A."""
    d = x.dag
    junctions = set(x.junctions)
    last_use = {j: max(c for c, jj in x.cross.items() if jj == j) for j in junctions}
    last_use[x.a_nodes[-1]] = max(last_use.get(x.a_nodes[-1], x.c_nodes[0]), x.c_nodes[0])
    configs = []
    cur: set[int] = set()
    prev = None
    for v in list(x.a_nodes) + list(x.c_nodes):
        if prev is not None and prev not in junctions:
            cur.discard(prev)  # slide along the path
        cur.add(v)
        cur -= {j for j in junctions if last_use[j] < v and j != v}
        configs.append(frozenset(cur))
        prev = v
    return PebblingStrategy.standard(configs)


def p1_constant_space(x: Crossover, s1: int = 2) -> PebblingStrategy:
    """Constant space s1: park s1-2 junctions, re-walk A for every other junction."""
    if s1 < 2:
        raise ValueError("P1 needs s1 >= 2")
    a_nodes, c_nodes = x.a_nodes, x.c_nodes
    parked = set(x.junctions[: s1 - 2])
    bridge = a_nodes[-1]
    configs: list[frozenset] = []
    cur: set[int] = set()

    def emit():
        configs.append(frozenset(cur))

    def walk_to(j: int):
        """Bring a fresh walker from the source of A up to node j."""
        if j in cur:
            return
        pos = a_nodes[0]
        cur.add(pos)
        emit()
        while pos != j:
            nxt = pos + 1
            if pos in parked:
                cur.add(nxt)       # leave the parked pebble behind
            else:
                cur.discard(pos)
                cur.add(nxt)
            pos = nxt
            emit()

    # initial walk, parking as it goes, ends on the bridge node
    walk_to(bridge)
    prev_c = None
    for c in c_nodes:
        j = x.cross[c]
        walk_to(j)
        if prev_c is None:
            # first C node: both predecessors are A nodes
            movable = [u for u in (bridge, j) if u not in parked]
            if movable:
                cur.discard(movable[0])
            cur.add(c)
            emit()
            for u in movable[1:]:
                cur.discard(u)
                emit()
        else:
            cur.discard(prev_c)
            cur.add(c)
            emit()
            if j not in parked and j in cur:
                cur.discard(j)
                emit()
        prev_c = c
    return PebblingStrategy.standard(configs)


def crossover_alpha(p1: PebblingStrategy, p2: PebblingStrategy, lo: float = 1.0,
                    hi: float | None = None, tol: float = 1e-9) -> float | None:
    """Bisect for the alpha where pcc_alpha(P1) - pcc_alpha(P2) changes sign.

    Returns None when there is no sign change on [lo, hi].
    """
    from collections import Counter
    h1 = Counter(p1.sizes)
    h2 = Counter(p2.sizes)

    def f(a: float) -> float:
        return pcc_from_histogram(h1, float(a)) - pcc_from_histogram(h2, float(a))

    flo = f(lo)
    if hi is None:
        hi = lo * 2
        while (f(hi) > 0) == (flo > 0) and hi < 4096:
            hi *= 2
    if (f(hi) > 0) == (flo > 0):
        return None
    while hi - lo > tol * max(1.0, lo):
        mid = (lo + hi) / 2
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# -- GenPeb -------------------------------------------------------------------

def _longest_path_counts(d: Dag, removed: set[int]):
    n = d.node_count
    din = [0] * n
    cin = [0] * n
    for v in range(n):
        if v in removed:
            continue
        best, cnt = 0, 1
        for u in d.preds[v]:
            if u in removed:
                continue
            if din[u] > best:
                best, cnt = din[u], cin[u]
            elif din[u] == best and best > 0:
                cnt += cin[u]
        din[v], cin[v] = best + 1, cnt
    dout = [0] * n
    cout = [0] * n
    for v in range(n - 1, -1, -1):
        if v in removed:
            continue
        best, cnt = 0, 1
        for w in d.succs[v]:
            if w in removed:
                continue
            if dout[w] > best:
                best, cnt = dout[w], cout[w]
            elif dout[w] == best and best > 0:
                cnt += cout[w]
        dout[v], cout[v] = best + 1, cnt
    return din, cin, dout, cout


def depth_reducing_set(d: Dag, target_depth: int) -> list[int]:
    """Greedily remove the node lying on the most longest paths until depth <= target.

    Ties go to the node splitting its longest paths most evenly.
    """
    removed: set[int] = set()
    order: list[int] = []
    while True:
        din, cin, dout, cout = _longest_path_counts(d, removed)
        depth = max(din, default=0)
        if depth <= target_depth:
            return order
        best, pick = (-1, -1), None
        for v in range(d.node_count):
            if v in removed or din[v] + dout[v] - 1 != depth:
                continue
            key = (cin[v] * cout[v], min(din[v], dout[v]))
            if key > best:
                best, pick = key, v
        removed.add(pick)
        order.append(pick)


def depth_without(d: Dag, removed: Iterable[int]) -> int:
    din, _, _, _ = _longest_path_counts(d, set(removed))
    return max(din, default=0)


@dataclass
class GenPebInfo:
    s_set: tuple[int, ...]
    depth_target: int
    phase_layers: int
    balloon_phases: int
    s_size_bound: float
    reached_depth: int
    notes: list[str] = field(default_factory=list)


def genpeb(d: Dag, alpha: float = 1.0) -> tuple[PebblingStrategy, GenPebInfo]:
    """Balloon/light-phase parallel pebbler built around a depth-reducing set S.

    Light phases pebble one depth layer per move and keep only S-nodes with
    pending descendants plus parents of the phase's remaining layers.
    Balloon phases recompute, in parallel, any dropped parents the next
    phase needs; their depth is bounded by depth(G - S).
    """
    n = d.node_count
    logn = math.log2(n) if n > 1 else 1.0
    target = max(1, int(n / logn ** alpha)) if n > 1 else 1
    s_list = depth_reducing_set(d, target)
    s_set = set(s_list)
    reached = depth_without(d, s_set)
    loglog = math.log2(logn) if logn > 1 else 0.0
    bound = 2 * alpha * n * loglog / logn if n > 1 else 0.0
    notes = []
    if len(s_set) > bound:
        notes.append(f"|S|={len(s_set)} exceeds 2*alpha*n*loglog(n)/log(n)={bound:.2f}")

    layer = d.depths
    top = d.depth
    by_layer: list[list[int]] = [[] for _ in range(top + 1)]
    for v in range(n):
        by_layer[layer[v]].append(v)
    # latest layer among strict descendants (0 if none)
    reach = [0] * n
    for v in range(n - 1, -1, -1):
        for w in d.succs[v]:
            reach[v] = max(reach[v], layer[w], reach[w])
    succ_layers = [sorted({layer[w] for w in d.succs[v]}) for v in range(n)]

    def has_succ_in(v: int, lo: int, hi: int) -> bool:
        return any(lo <= L <= hi for L in succ_layers[v])

    g = target
    configs: list[frozenset] = []
    cur: set[int] = set()
    balloons = 0
    for a in range(1, top + 1, g):
        b = min(top, a + g - 1)
        needed = set()
        for t in range(a, b + 1):
            for v in by_layer[t]:
                needed.update(u for u in d.preds[v] if layer[u] < a and u not in cur)
        if needed:
            balloons += 1
            region = set(needed)
            stack = list(needed)
            while stack:
                v = stack.pop()
                for u in d.preds[v]:
                    if u not in cur and u not in region:
                        region.add(u)
                        stack.append(u)
            rdepth: dict[int, int] = {}
            for v in sorted(region):
                rdepth[v] = 1 + max((rdepth[u] for u in d.preds[v] if u in region), default=0)
            for step in range(1, max(rdepth.values()) + 1):
                cur |= {v for v, r in rdepth.items() if r == step}
                configs.append(frozenset(cur))
        for t in range(a, b + 1):
            cur |= set(by_layer[t])
            cur = {u for u in cur
                   if layer[u] == t
                   or has_succ_in(u, t + 1, b)
                   or (u in s_set and reach[u] > t)}
            configs.append(frozenset(cur))
    info = GenPebInfo(tuple(sorted(s_set)), target, g, balloons, bound, reached, notes)
    return PebblingStrategy.standard(configs), info

"""Rule checking for the standard and black-magic pebble games, plus cost measures.

Configurations are node sets (standard) or (black, magic) pairs. A move
from P_{i-1} to P_i is legal when every newly pebbled node is a source or
had all its predecessors pebbled in P_{i-1}. Removals are free. With
``slides=False`` a placement additionally requires its predecessors to stay
pebbled through the move, which rules out the slide shortcut.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .graph import Dag

SEQUENTIAL = "sequential"
PARALLEL = "parallel"
MODES = (SEQUENTIAL, PARALLEL)


class StrategyError(ValueError):
    """Raised for malformed strategy files or measuring an invalid strategy."""


class MagicConfig(NamedTuple):
    black: frozenset
    magic: frozenset

    @property
    def pebbled(self) -> frozenset:
        return self.black | self.magic

    @property
    def size(self) -> int:
        return len(self.black) + len(self.magic)


EMPTY = frozenset()
EMPTY_MAGIC = MagicConfig(EMPTY, EMPTY)


@dataclass(frozen=True)
class PebblingStrategy:
    kind: str                      # "standard" or "magic"
    configs: tuple
    magic_bound: int | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "magic"):
            raise StrategyError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "standard":
            cfgs = tuple(frozenset(c) for c in self.configs)
        else:
            cfgs = tuple(MagicConfig(frozenset(c[0]), frozenset(c[1])) for c in self.configs)
        object.__setattr__(self, "configs", cfgs)

    @classmethod
    def standard(cls, configs: Iterable[Iterable[int]]) -> "PebblingStrategy":
        cfgs = [frozenset(c) for c in configs]
        if not cfgs or cfgs[0]:
            cfgs.insert(0, EMPTY)
        return cls("standard", tuple(cfgs))

    @classmethod
    def magic(cls, configs, magic_bound: int | None = None) -> "PebblingStrategy":
        cfgs = [MagicConfig(frozenset(b), frozenset(m)) for b, m in configs]
        if not cfgs or cfgs[0].size:
            cfgs.insert(0, EMPTY_MAGIC)
        return cls("magic", tuple(cfgs), magic_bound)

    def pebbled(self, i: int) -> frozenset:
        c = self.configs[i]
        return c if self.kind == "standard" else c.pebbled

    @property
    def time(self) -> int:
        return len(self.configs) - 1

    @property
    def sizes(self) -> list[int]:
        return [len(self.pebbled(i)) for i in range(1, len(self.configs))]

    @property
    def magic_used(self) -> int:
        if self.kind == "standard":
            return 0
        ever = set()
        for c in self.configs:
            ever |= c.magic
        return len(ever)


@dataclass(frozen=True)
class Violation:
    step: int
    message: str

    def __str__(self):
        return f"step {self.step}: {self.message}"


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _goal(d: Dag, strat: PebblingStrategy, targets, persistent: bool) -> Violation | None:
    targets = set(d.targets if targets is None else targets)
    if persistent:
        final = strat.pebbled(len(strat.configs) - 1)
        missing = targets - final
    else:
        seen = set()
        for i in range(1, len(strat.configs)):
            seen |= strat.pebbled(i)
        missing = targets - seen
    if missing:
        return Violation(strat.time, f"goal not met: targets {sorted(missing)} never pebbled")
    return None


def _placement_ok(d: Dag, v: int, before: frozenset, after: frozenset, slides: bool) -> bool:
    p = d.preds[v]
    if not p:
        return True
    if not all(u in before for u in p):
        return False
    return slides or all(u in after for u in p)


def validate_standard(d: Dag, strat: PebblingStrategy, targets=None, mode: str = SEQUENTIAL,
                      slides: bool = True, persistent: bool = False) -> Violation | None:
    """Check every move of a standard strategy and the visiting goal."""
    _check_mode(mode)
    if strat.kind != "standard":
        return Violation(0, "expected a standard strategy")
    cfgs = strat.configs
    if not cfgs or cfgs[0]:
        return Violation(0, "first configuration must be empty")
    n = d.node_count
    for i in range(1, len(cfgs)):
        prev, cur = cfgs[i - 1], cfgs[i]
        bad = [v for v in cur if not 0 <= v < n]
        if bad:
            return Violation(i, f"node {bad[0]} out of range")
        new = cur - prev
        if mode == SEQUENTIAL and len(new) > 1:
            return Violation(i, f"sequentiality breach: {len(new)} nodes placed ({sorted(new)})")
        for v in sorted(new):
            if not _placement_ok(d, v, prev, cur, slides):
                return Violation(i, f"illegal placement on node {v}: predecessors "
                                    f"{list(d.preds[v])} not pebbled"
                                    + ("" if slides else " through the move"))
    return _goal(d, strat, targets, persistent)


def validate_magic(d: Dag, strat: PebblingStrategy, targets=None, mode: str = SEQUENTIAL,
                   slides: bool = True, persistent: bool = False) -> Violation | None:
    """Check a black-magic strategy: black moves follow the standard rules with
    magic pebbles counting as pebbled, magic placements are free but bounded,
    and a node never receives a second magic pebble."""
    _check_mode(mode)
    if strat.kind != "magic":
        return Violation(0, "expected a magic strategy")
    cfgs = strat.configs
    if not cfgs or cfgs[0].size:
        return Violation(0, "first configuration must be empty")
    n = d.node_count
    ever: set[int] = set()
    bound = strat.magic_bound
    for i in range(1, len(cfgs)):
        prev, cur = cfgs[i - 1], cfgs[i]
        if cur.black & cur.magic:
            return Violation(i, f"node {min(cur.black & cur.magic)} holds black and magic pebbles")
        bad = [v for v in cur.pebbled if not 0 <= v < n]
        if bad:
            return Violation(i, f"node {bad[0]} out of range")
        new_black = cur.black - prev.black
        new_magic = cur.magic - prev.magic
        if mode == SEQUENTIAL and len(new_black) + len(new_magic) > 1:
            return Violation(i, "sequentiality breach: more than one pebble placed")
        reused = new_magic & ever
        if reused:
            return Violation(i, f"magic pebble reused on node {min(reused)}")
        ever |= new_magic
        if bound is not None and len(ever) > bound:
            return Violation(i, f"magic budget exceeded: {len(ever)} > {bound}")
        pb, pc = prev.pebbled, cur.pebbled
        for v in sorted(new_black):
            if not _placement_ok(d, v, pb, pc, slides):
                return Violation(i, f"illegal black placement on node {v}: predecessors "
                                    f"{list(d.preds[v])} not pebbled")
    return _goal(d, strat, targets, persistent)


def validate(d: Dag, strat: PebblingStrategy, targets=None, mode: str = SEQUENTIAL,
             slides: bool = True, persistent: bool = False) -> Violation | None:
    fn = validate_standard if strat.kind == "standard" else validate_magic
    return fn(d, strat, targets, mode, slides, persistent)


def _is_integral(alpha) -> bool:
    if isinstance(alpha, int):
        return True
    if isinstance(alpha, Fraction):
        return alpha.denominator == 1
    return float(alpha).is_integer()


def pcc_from_histogram(hist: dict[int, int], alpha, magic_used: int = 0):
    """Sum of |P_i|^alpha from a size histogram; exact int for integral alpha.

    A non-zero ``magic_used`` applies the black-magic variant max(m^alpha, sum).
    """
    if _is_integral(alpha):
        a = int(alpha)
        total = sum(cnt * size ** a for size, cnt in hist.items())
        return max(total, magic_used ** a) if magic_used else total
    a = float(alpha)
    total = math.fsum(cnt * float(size) ** a for size, cnt in hist.items())
    return max(total, float(magic_used) ** a) if magic_used else total


@dataclass
class CostReport:
    space: int
    time: int
    sustained: dict[int, int]
    graph_space: int
    graph_space_source: str
    graph_opt_sustained: int
    delta_subopt: dict[int, int]
    pcc_alpha: dict
    magic_used: int
    magic_space: int
    histogram: dict[int, int] = field(default_factory=dict)

    def sustained_at(self, lam: int) -> int:
        return sum(c for s, c in self.histogram.items() if s >= lam)

    def pcc(self, alpha):
        return pcc_from_histogram(self.histogram, alpha, self.magic_used)

    def as_row(self) -> dict:
        row = {"space": self.space, "time": self.time, "magic_used": self.magic_used,
               "magic_space": self.magic_space, "graph_space": self.graph_space,
               "graph_space_source": self.graph_space_source,
               "graph_opt_sustained": self.graph_opt_sustained}
        for lam, v in sorted(self.sustained.items()):
            row[f"sustained_{lam}"] = v
        for delta, v in sorted(self.delta_subopt.items()):
            row[f"delta_subopt_{delta}"] = v
        for a, v in self.pcc_alpha.items():
            row[f"pcc_{a}"] = v
        return row


def measure(d: Dag, strat: PebblingStrategy, alphas: Sequence = (1, 2), targets=None,
            mode: str = PARALLEL, slides: bool = True, graph_space: int | None = None,
            deltas: Sequence[int] = (0, 1)) -> CostReport:
    """Compute every complexity measure of a strategy; refuses invalid strategies.

    ``graph_space`` is the graph's space complexity used for the graph-optimal
    and suboptimal sustained measures. When omitted the strategy's own peak
    stands in and ``graph_space_source`` says so.
    """
    bad = validate(d, strat, targets, mode, slides)
    if bad:
        raise StrategyError(f"cannot measure an invalid strategy: {bad}")
    sizes = strat.sizes
    hist = dict(sorted(Counter(sizes).items()))
    space = max(sizes, default=0)
    m = strat.magic_used
    gs, src = (graph_space, "supplied") if graph_space is not None else (space, "strategy-peak")

    def ss(lam: int) -> int:
        return sum(1 for s in sizes if s >= lam)

    return CostReport(
        space=space,
        time=strat.time,
        sustained={lam: ss(lam) for lam in range(0, space + 2)},
        graph_space=gs,
        graph_space_source=src,
        graph_opt_sustained=ss(gs),
        delta_subopt={delta: ss(gs - delta) for delta in deltas},
        pcc_alpha={a: pcc_from_histogram(hist, a, m) for a in alphas},
        magic_used=m,
        magic_space=max(m, space),
        histogram=hist,
    )


# -- PSTRAT1 strategy files ------------------------------------------------

STRAT_MAGIC = "PSTRAT1"
_OPS = ("+b", "-b", "+m", "-m", ">")


def _fmt(op: str, items) -> str:
    return op + "".join(f" {x}" for x in items)


def format_strategy(strat: PebblingStrategy, d: Dag | None = None) -> str:
    """Render a strategy as PSTRAT1 text. With a graph, removals of a
    predecessor paired with a placement are written as slides."""
    bound = "-" if strat.magic_bound is None else str(strat.magic_bound)
    head = f"{STRAT_MAGIC} {strat.kind}" + (f" {bound}" if strat.kind == "magic" else "")
    lines = [head]
    for i in range(1, len(strat.configs)):
        prev, cur = strat.configs[i - 1], strat.configs[i]
        if strat.kind == "standard":
            pb, cb, pm, cm = prev, cur, EMPTY, EMPTY
        else:
            pb, cb, pm, cm = prev.black, cur.black, prev.magic, cur.magic
        added = sorted(cb - pb)
        removed = set(pb - cb)
        slides = []
        if d is not None:
            for v in added:
                for u in d.preds[v]:
                    if u in removed and u not in cm:
                        slides.append((u, v))
                        removed.discard(u)
                        break
        slid_to = {v for _, v in slides}
        parts = []
        if cm - pm:
            parts.append(_fmt("+m", sorted(cm - pm)))
        if pm - cm:
            parts.append(_fmt("-m", sorted(pm - cm)))
        plus = [v for v in added if v not in slid_to]
        if plus:
            parts.append(_fmt("+b", plus))
        if removed:
            parts.append(_fmt("-b", sorted(removed)))
        if slides:
            parts.append(_fmt(">", [f"{u}:{v}" for u, v in slides]))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_strategy(text: str, d: Dag | None = None) -> PebblingStrategy:
    """Parse PSTRAT1 text, checking action-level consistency as it replays."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise StrategyError("empty strategy file")
    head = lines[0].split()
    if not head or head[0] != STRAT_MAGIC or len(head) < 2 or head[1] not in ("standard", "magic"):
        raise StrategyError(f"malformed strategy header {lines[0]!r}")
    kind = head[1]
    bound = None
    if kind == "magic" and len(head) > 2 and head[2] != "-":
        try:
            bound = int(head[2])
        except ValueError:
            raise StrategyError(f"bad magic bound {head[2]!r}") from None
    black: frozenset = EMPTY
    magic: frozenset = EMPTY
    configs = [EMPTY_MAGIC]
    for lineno, line in enumerate(lines[1:], start=1):
        groups: dict[str, list] = {op: [] for op in _OPS}
        op = None
        for tok in line.split():
            if tok in _OPS:
                op = tok
                continue
            if op is None:
                raise StrategyError(f"move {lineno}: token {tok!r} before any operator")
            try:
                if op == ">":
                    a, b = tok.split(":")
                    groups[op].append((int(a), int(b)))
                else:
                    groups[op].append(int(tok))
            except ValueError:
                raise StrategyError(f"move {lineno}: bad token {tok!r}") from None
        if kind == "standard" and (groups["+m"] or groups["-m"]):
            raise StrategyError(f"move {lineno}: magic pebbles in a standard strategy")
        for v in groups["-b"]:
            if v not in black:
                raise StrategyError(f"move {lineno}: removing absent black pebble {v}")
        for v in groups["-m"]:
            if v not in magic:
                raise StrategyError(f"move {lineno}: removing absent magic pebble {v}")
        froms = [u for u, _ in groups[">"]]
        if len(set(froms)) != len(froms):
            raise StrategyError(f"move {lineno}: a pebble slides more than once")
        for u, v in groups[">"]:
            if u in magic:
                raise StrategyError(f"move {lineno}: magic pebble reused (magic pebble {u} cannot slide)")
            if u not in black:
                raise StrategyError(f"move {lineno}: sliding absent pebble from {u}")
            if d is not None and (u, v) not in d.edge_set:
                raise StrategyError(f"move {lineno}: slide {u}:{v} is not along an edge")
        for v in groups["+b"] + [v for _, v in groups[">"]]:
            if v in black and v not in groups["-b"] and v not in froms:
                raise StrategyError(f"move {lineno}: node {v} already holds a black pebble")
        for v in groups["+m"]:
            if v in magic and v not in groups["-m"]:
                raise StrategyError(f"move {lineno}: node {v} already holds a magic pebble")
        nb = (black - set(groups["-b"]) - set(froms)) | set(groups["+b"]) | {v for _, v in groups[">"]}
        nm = (magic - set(groups["-m"])) | set(groups["+m"])
        black, magic = frozenset(nb), frozenset(nm)
        configs.append(MagicConfig(black, magic))
    if kind == "standard":
        return PebblingStrategy("standard", tuple(c.black for c in configs))
    return PebblingStrategy("magic", tuple(configs), bound)


def incremental_hardness_check(d: Dag, mbound: int = 0, sizes: Iterable[int] | None = None,
                               mode: str = PARALLEL, budget=None):
    """For each target subset C with |C| > mbound, decide whether pebbling C with
    |C|-1 magic pebbles needs at least |T| pebbles. Delegates to the solver."""
    from .solver import incremental_hardness
    return incremental_hardness(d, mbound, sizes, mode, budget)

"""Query-trace capture and the induced ex-post-facto black-magic pebbling.

An evaluation runs against a ``TracingOracle`` and issues its queries in
batches. Replaying the trace against the true labeling tells which node
each query computes. A node becomes black in the step of its query, and
predecessors that were never legitimately derived get magic pebbles placed
one step earlier. Pebbles are then kept only while they are still needed.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .engine import PARALLEL, PebblingStrategy, validate_magic
from .graph import Dag
from .shf import Oracle, OracleSpec, all_labels, pre_label

TRACE_MAGIC = "PTRACE1"


class TraceError(ValueError):
    pass


@dataclass
class QueryTrace:
    batches: list[list[tuple[bytes, bytes]]] = field(default_factory=list)
    declared_input_bits: int = 0

    @property
    def queries(self) -> int:
        return sum(len(b) for b in self.batches)

    def check_consistent(self) -> None:
        seen: dict[bytes, bytes] = {}
        for i, batch in enumerate(self.batches, 1):
            for q, a in batch:
                if seen.setdefault(q, a) != a:
                    raise TraceError(f"inconsistent oracle: batch {i} answers a repeated query differently")

    def to_text(self) -> str:
        lines = [f"{TRACE_MAGIC} {self.declared_input_bits}"]
        lines += [" ".join(f"{q.hex()}:{a.hex()}" for q, a in b) for b in self.batches]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QueryTrace":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        head = lines[0].split() if lines else []
        if len(head) != 2 or head[0] != TRACE_MAGIC:
            raise TraceError("missing PTRACE1 header")
        try:
            bits = int(head[1])
            batches = []
            for line in lines[1:]:
                batch = []
                for tok in line.split():
                    q, a = tok.split(":")
                    batch.append((bytes.fromhex(q), bytes.fromhex(a)))
                batches.append(batch)
        except ValueError as e:
            raise TraceError(f"malformed trace: {e}") from None
        return cls(batches, bits)


class TracingOracle(Oracle):
    """An oracle that appends each query to the current batch."""

    def __init__(self, spec: OracleSpec | None = None, declared_input_bits: int = 0):
        super().__init__(spec)
        self.trace = QueryTrace([], declared_input_bits)

    def new_batch(self) -> None:
        self.trace.batches.append([])

    def __call__(self, data: bytes) -> bytes:
        out = super().__call__(data)
        if not self.trace.batches:
            self.new_batch()
        self.trace.batches[-1].append((bytes(data), out))
        return out


def _last_use(d: Dag) -> dict[int, int]:
    """Depth of the deepest successor of each node (0 when it has none)."""
    dep = d.depths
    return {v: max((dep[w] for w in d.succs[v]), default=0) for v in range(d.node_count)}


def honest_levelwise(d: Dag, oracle: TracingOracle, zeta: bytes) -> tuple[list[bytes], list[int]]:
    """Evaluate every label with one batch per depth level.

    Returns the target labels and the number of labels held after each batch.
    Labels are dropped as soon as no later level reads them. Target labels
    are kept to the end.
    """
    dep = d.depths
    last = _last_use(d)
    targets = set(d.targets)
    held: dict[int, bytes] = {}
    state_sizes = []
    for level in range(1, d.depth + 1):
        oracle.new_batch()
        for v in (v for v in range(d.node_count) if dep[v] == level):
            held[v] = oracle.label_of(pre_label(d, v, zeta, held))
        held = {u: x for u, x in held.items() if last[u] > level or u in targets}
        state_sizes.append(len(held))
    return [held[t] for t in d.targets], state_sizes


def scripted_adversary(d: Dag, oracle: TracingOracle, zeta: bytes, inject: Iterable[int]) -> list[bytes]:
    """A level-wise evaluator that reads the labels of ``inject`` from a hint.

    The hint is computed out of band, so the injected nodes never appear in
    the trace. Everything else is evaluated honestly.
    """
    inject = set(inject)
    hint = {v: lab for v, lab in enumerate(all_labels(d, Oracle(oracle.spec), zeta)) if v in inject}
    dep = d.depths
    held: dict[int, bytes] = {}
    for level in range(1, d.depth + 1):
        oracle.new_batch()
        for v in (v for v in range(d.node_count) if dep[v] == level):
            held[v] = hint[v] if v in inject else oracle.label_of(pre_label(d, v, zeta, held))
    return [held[t] for t in d.targets]


@dataclass
class ExPostFacto:
    strategy: PebblingStrategy
    matched: int
    unmatched: int
    preload: bool                  # a magic-only step was inserted before batch 1


def ex_post_facto(d: Dag, oracle: Oracle, zeta: bytes, trace: QueryTrace) -> ExPostFacto:
    """Build the black-magic pebbling induced by a query trace."""
    trace.check_consistent()
    truth = all_labels(d, Oracle(oracle.spec), zeta)
    lb = oracle.spec.label_bits // 8
    index = {pre_label(d, v, zeta, truth): v for v in range(d.node_count)}
    produced: dict[int, list[int]] = defaultdict(list)   # node -> batches querying it
    uses: dict[int, list[int]] = defaultdict(list)       # node -> batches needing it
    matched = unmatched = 0
    for i, batch in enumerate(trace.batches, 1):
        for q, a in batch:
            v = index.get(q)
            if v is None:
                unmatched += 1
                continue
            if a[:lb] != truth[v]:
                raise TraceError(f"inconsistent oracle: answer for node {v} disagrees with the labeling")
            matched += 1
            produced[v].append(i)
            for u in d.preds[v]:
                uses[u].append(i)

    t = len(trace.batches)
    black = [set() for _ in range(t + 1)]
    magic = [set() for _ in range(t + 1)]
    for v in range(d.node_count):
        prod = sorted(set(produced.get(v, ())))
        for i in prod:
            black[i].add(v)
        for i in sorted(set(uses.get(v, ()))):
            src = [j for j in prod if j <= i - 1]
            if src:
                for k in range(src[-1], i):
                    black[k].add(v)
            else:
                magic[i - 1].add(v)
        # a magic pebble stays from its first use until its last unproduced use
        steps = sorted(k for k in range(t + 1) if v in magic[k])
        for k in range(steps[0], steps[-1] + 1) if steps else ():
            magic[k].add(v)
    preload = bool(magic[0])
    start = 0 if preload else 1
    configs = [(black[k], magic[k]) for k in range(start, t + 1)]
    strat = PebblingStrategy.magic(configs)
    return ExPostFacto(strat, matched, unmatched, preload)


@dataclass
class AuditReport:
    legal: bool
    violation: str | None
    goal_met: bool
    magic_used: int
    chi: int
    flagged: bool
    timeline: list[int]
    matched: int = 0
    unmatched: int = 0

    def as_row(self) -> dict:
        return {"legal": self.legal, "goal_met": self.goal_met, "magic_used": self.magic_used,
                "chi": self.chi, "flagged": self.flagged, "peak": max(self.timeline, default=0),
                "steps": len(self.timeline), "matched": self.matched, "unmatched": self.unmatched,
                "violation": self.violation or ""}


def chi_for(declared_input_bits: int, word_bits: int) -> int:
    return declared_input_bits // word_bits


def audit(d: Dag, strategy: PebblingStrategy, chi: int, targets=None) -> AuditReport:
    """Report legality, magic usage against chi, and the per-step pebble counts."""
    bad = validate_magic(d, strategy, targets=(), mode=PARALLEL)
    want = set(d.targets if targets is None else targets)
    seen = set()
    for i in range(1, len(strategy.configs)):
        seen |= strategy.pebbled(i)
    used = strategy.magic_used
    return AuditReport(bad is None, None if bad is None else str(bad), want <= seen,
                       used, chi, used > chi, strategy.sizes)


def audit_trace(d: Dag, oracle: Oracle, zeta: bytes, trace: QueryTrace) -> AuditReport:
    epf = ex_post_facto(d, oracle, zeta, trace)
    rep = audit(d, epf.strategy, chi_for(trace.declared_input_bits, oracle.spec.word_bits))
    rep.matched, rep.unmatched = epf.matched, epf.unmatched
    return rep

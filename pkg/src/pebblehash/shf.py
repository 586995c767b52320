"""Static-memory-hard function: graph labeling (H1), masked table lookups (H2),
and a row-streaming cylinder evaluator.

Oracle inputs are domain separated by a one-byte tag:
0x01 source label, 0x02 internal label, 0x03 H2 mask, 0x04 index expansion.
Node identities are encoded as the tag followed by the 8-byte little-endian
node index.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .constructions import ConstructionParams, build
from .graph import Dag

TAG_SOURCE = 0x01
TAG_INTERNAL = 0x02
TAG_MASK = 0x03
TAG_EXPAND = 0x04
HASH_IDS = ("blake2b", "test")
TABLE_MAGIC = b"SHFR1"


class ShfError(ValueError):
    pass


@dataclass(frozen=True)
class OracleSpec:
    word_bits: int = 512
    hash_id: str = "blake2b"
    truncate_to: int | None = None
    seed: int = 0              # only used by the test oracle

    def __post_init__(self):
        if self.word_bits <= 0 or self.word_bits % 8:
            raise ShfError("word_bits must be a positive multiple of 8")
        if self.hash_id not in HASH_IDS:
            raise ShfError(f"unknown hash_id {self.hash_id!r}; choose from {HASH_IDS}")
        if self.hash_id == "blake2b" and self.word_bits > 512:
            raise ShfError("blake2b output is at most 512 bits")
        t = self.truncate_to
        if t is not None:
            if t <= 0 or self.word_bits % t:
                raise ShfError("truncate_to must divide word_bits")
            if t % 8:
                raise ShfError("truncate_to must be a multiple of 8")

    @property
    def word_bytes(self) -> int:
        return self.word_bits // 8

    @property
    def label_bits(self) -> int:
        return self.truncate_to or self.word_bits


class Oracle:
    """Random-oracle instantiation with a call counter.

    ``blake2b`` is unkeyed blake2b with a w-bit digest. ``test`` is
    shake-256 over a seed prefix, giving a family of independent oracles.
    """

    def __init__(self, spec: OracleSpec | None = None):
        self.spec = spec or OracleSpec()
        self.calls = 0
        if self.spec.hash_id == "test":
            self._prefix = b"pebblehash-test-oracle" + struct.pack("<Q", self.spec.seed)

    def __call__(self, data: bytes) -> bytes:
        self.calls += 1
        return self.raw(data)

    def raw(self, data: bytes) -> bytes:
        nb = self.spec.word_bytes
        if self.spec.hash_id == "blake2b":
            return hashlib.blake2b(data, digest_size=nb).digest()
        return hashlib.shake_256(self._prefix + data).digest(nb)

    def label_of(self, data: bytes) -> bytes:
        """Oracle output cut to the first label_bits bits."""
        return self(data)[: self.spec.label_bits // 8]


def enc(tag: int, v: int) -> bytes:
    return bytes([tag]) + struct.pack("<Q", v)


def pre_label(d: Dag, v: int, zeta: bytes, labels: Sequence[bytes] | dict) -> bytes:
    """The oracle input whose answer is the label of v."""
    p = d.preds[v]
    if not p:
        return enc(TAG_SOURCE, v) + zeta
    return enc(TAG_INTERNAL, v) + b"".join(labels[u] for u in p)


def _check_zeta(oracle: Oracle, zeta: bytes) -> None:
    if len(zeta) != oracle.spec.word_bytes:
        raise ShfError(f"zeta must be {oracle.spec.word_bits} bits, got {len(zeta) * 8}")


def all_labels(d: Dag, oracle: Oracle, zeta: bytes) -> list[bytes]:
    """Labels of every node, one oracle call per node, in index order."""
    _check_zeta(oracle, zeta)
    labels: list[bytes] = []
    for v in range(d.node_count):
        labels.append(oracle.label_of(pre_label(d, v, zeta, labels)))
    return labels


def label(d: Dag, oracle: Oracle, zeta: bytes, v: int, memo: dict | None = None) -> bytes:
    """Label of a single node; only its ancestors are evaluated."""
    _check_zeta(oracle, zeta)
    memo = {} if memo is None else memo
    need = sorted(d.ancestors([v]) | {v})
    for u in need:
        if u not in memo:
            memo[u] = oracle.label_of(pre_label(d, u, zeta, memo))
    return memo[v]


@dataclass(frozen=True)
class StaticTable:
    labels: tuple[bytes, ...]
    label_bits: int
    word_bits: int
    params_digest: bytes = bytes(32)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(bytes(x) for x in self.labels))
        if any(len(x) * 8 != self.label_bits for x in self.labels):
            raise ShfError("label length does not match label_bits")
        if len(self.params_digest) != 32:
            raise ShfError("params digest must be 32 bytes")

    @property
    def count(self) -> int:
        return len(self.labels)

    @property
    def size_bits(self) -> int:
        """Lambda: the table's size in bits."""
        return self.count * self.label_bits

    def to_bytes(self) -> bytes:
        head = TABLE_MAGIC + struct.pack("<III", self.word_bits, self.label_bits, self.count)
        return head + self.params_digest + b"".join(self.labels)

    @classmethod
    def from_bytes(cls, data: bytes) -> "StaticTable":
        if data[:5] != TABLE_MAGIC:
            raise ShfError("not an SHFR1 table")
        if len(data) < 5 + 12 + 32:
            raise ShfError("truncated SHFR1 header")
        w, lb, count = struct.unpack_from("<III", data, 5)
        if lb == 0 or lb % 8:
            raise ShfError("bad label size in SHFR1 header")
        digest = data[17:49]
        body = data[49:]
        step = lb // 8
        if len(body) != count * step:
            raise ShfError(f"SHFR1 body holds {len(body)} bytes, expected {count * step}")
        labels = tuple(body[i * step:(i + 1) * step] for i in range(count))
        return cls(labels, lb, w, digest)


def params_digest(params: ConstructionParams | str, oracle: Oracle, zeta: bytes) -> bytes:
    text = params if isinstance(params, str) else params.canonical()
    spec = oracle.spec
    blob = f"{text}|{spec.hash_id}|{spec.word_bits}|{spec.truncate_to}|{spec.seed}".encode()
    return hashlib.blake2b(blob + b"|" + zeta, digest_size=32).digest()


def h1(params: ConstructionParams | Dag, oracle: Oracle, zeta: bytes) -> StaticTable:
    """Labels of the graph's targets, in target order."""
    d = params if isinstance(params, Dag) else build(params)
    key = d.name if isinstance(params, Dag) else params
    labels = all_labels(d, oracle, zeta)
    return StaticTable(tuple(labels[t] for t in d.targets), oracle.spec.label_bits,
                       oracle.spec.word_bits, params_digest(key, oracle, zeta),
                       {"graph": d.name, "nodes": d.node_count})


def h1_streaming(oracle: Oracle, zeta: bytes, row_bits: int, in_bits: int, out_bits: int,
                 rows: int | None = None) -> StaticTable:
    """Evaluate the wraparound cylinder one row at a time in a single buffer.

    The buffer holds one row of l bits plus an (i - n)-bit wraparound copy of
    its leftmost part. Each hash reads i bits at offset f and overwrites the n
    bits at f, so the row is updated in place. With d = i/n, row r sits
    rotated left by r(d - 1) columns, which makes the contiguous window at
    offset f exactly the predecessors of the column that lands at f in the
    next row. Node
    indices follow the cylinder numbering level*width + column, and a window
    that wraps around is reordered into ascending column order. Default row
    count is l/(i - n).
    """
    n, i, l = out_bits, in_bits, row_bits
    if n <= 0 or n % 8 or l % n or i % n:
        raise ShfError("row_bits and in_bits must be multiples of out_bits (a whole number of bytes)")
    if i <= n:
        raise ShfError("in_bits must exceed out_bits")
    if n != oracle.spec.label_bits:
        raise ShfError("out_bits must equal the oracle label size")
    _check_zeta(oracle, zeta)
    width = l // n
    delta = i // n
    if delta > width:
        raise ShfError("a hash input cannot span more than one row")
    if rows is None:
        if l % (i - n):
            raise ShfError("row_bits must be a multiple of in_bits - out_bits")
        rows = l // (i - n)
    nb = n // 8
    extra = (i - n) // 8
    buf = bytearray(l // 8 + extra)
    for c in range(width):
        buf[c * nb:(c + 1) * nb] = oracle.label_of(enc(TAG_SOURCE, c) + zeta)
    for r in range(rows - 1):
        buf[l // 8:] = buf[:extra]                     # wraparound copy
        for p in range(width):
            f = p * nb
            window = bytes(buf[f:f + i // 8])
            first = (p + r * (delta - 1)) % width      # column of the window start
            col = (first + delta - 1) % width
            if first + delta > width:                  # window wraps: ascending columns
                parts = [(((first + k) % width), window[k * nb:(k + 1) * nb]) for k in range(delta)]
                window = b"".join(x for _, x in sorted(parts))
            node = (r + 1) * width + col
            buf[f:f + nb] = oracle.label_of(enc(TAG_INTERNAL, node) + window)
    shift = ((rows - 1) * (delta - 1)) % width
    final = [bytes(buf[((c - shift) % width) * nb:((c - shift) % width + 1) * nb]) for c in range(width)]
    desc = f"streaming(l={l},i={i},n={n},rows={rows})"
    return StaticTable(tuple(final), n, oracle.spec.word_bits, params_digest(desc, oracle, zeta),
                       {"rows": rows, "width": width})


def streaming_hash_calls(row_bits: int, in_bits: int, out_bits: int) -> int:
    """(l/n) * (l/(i-n)) hash calls for the default row count."""
    return (row_bits // out_bits) * (row_bits // (in_bits - out_bits))


class SeekOracle:
    """Word-granular access into a table, 1-based, with an access log."""

    def __init__(self, table: StaticTable):
        if not table.labels:
            raise ShfError("empty table")
        self.table = table
        self.log: list[int] = []

    @property
    def words(self) -> int:
        return self.table.count

    def __call__(self, iota: int) -> bytes:
        if not 1 <= iota <= self.words:
            raise ShfError(f"Seek index {iota} outside [1, {self.words}]")
        self.log.append(iota)
        return self.table.labels[iota - 1]


class IndexStream:
    """Unbiased indices in [1, N] drawn from rho0 and its expansions.

    Successive 64-bit big-endian windows are rejection sampled. When rho0 is
    used up the stream continues with O(0x04 || rho0 || counter).
    """

    def __init__(self, oracle: Oracle, rho0: bytes):
        self.oracle = oracle
        self.rho0 = rho0
        self.buf = rho0
        self.pos = 0
        self.counter = 0
        self.expansions = 0

    def _window(self) -> int:
        while self.pos + 8 > len(self.buf):
            self.buf = self.buf[self.pos:] + self.oracle(
                bytes([TAG_EXPAND]) + self.rho0 + struct.pack("<Q", self.counter))
            self.pos = 0
            self.counter += 1
            self.expansions += 1
        v = int.from_bytes(self.buf[self.pos:self.pos + 8], "big")
        self.pos += 8
        return v

    def draw(self, n: int) -> int:
        if n == 1:
            return 1
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self._window()
            if v < limit:
                return v % n + 1


def _masks(oracle: Oracle, x: bytes) -> tuple[bytes, bytes]:
    w = oracle.spec.word_bits
    if len(x) * 8 != w:
        raise ShfError(f"x must be {w} bits")
    x1 = ((int.from_bytes(x, "big") + 1) % (1 << w)).to_bytes(len(x), "big")
    return oracle(bytes([TAG_MASK]) + x), oracle(bytes([TAG_MASK]) + x1)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(p ^ q for p, q in zip(a, b))


def _as_seek(table) -> SeekOracle:
    return table if isinstance(table, SeekOracle) else SeekOracle(table)


def h2(table: StaticTable | SeekOracle, oracle: Oracle, x: bytes) -> bytes:
    """Mask one pseudo-randomly chosen table word with O(x+1)."""
    seek = _as_seek(table)
    if seek.table.label_bits != oracle.spec.word_bits:
        raise ShfError("h2 needs full-width table words; use h2_q for truncated labels")
    rho0, rho1 = _masks(oracle, x)
    iota = IndexStream(oracle, rho0).draw(seek.words)
    return _xor(seek(iota), rho1)


def h2_q(table: StaticTable | SeekOracle, oracle: Oracle, x: bytes, qprime: int) -> bytes:
    """Concatenate q' truncated table words and mask them with O(x+1)."""
    seek = _as_seek(table)
    w = oracle.spec.word_bits
    if qprime < 1 or w % qprime:
        raise ShfError("q' must divide the word size")
    if seek.table.label_bits * qprime != w:
        raise ShfError(f"truncation mismatch: labels are {seek.table.label_bits} bits, "
                       f"q'={qprime} needs {w // qprime}")
    rho0, rho1 = _masks(oracle, x)
    stream = IndexStream(oracle, rho0)
    words = [seek(stream.draw(seek.words)) for _ in range(qprime)]
    return _xor(b"".join(words), rho1)


def sample_indices(oracle: Oracle, x: bytes, words: int, qprime: int = 1) -> list[int]:
    """The table indices an evaluation on x would read, without reading them."""
    rho0, _ = _masks(oracle, x)
    stream = IndexStream(oracle, rho0)
    return [stream.draw(words) for _ in range(qprime)]

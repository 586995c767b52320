import hashlib
import random
import struct

import pytest

from pebblehash.constructions import ConstructionParams, cylinder, pyramid
from pebblehash.graph import make_dag
from pebblehash.shf import (IndexStream, Oracle, OracleSpec, SeekOracle, ShfError, StaticTable, all_labels,
                            enc, h1, h1_streaming, h2, h2_q, label, sample_indices, streaming_hash_calls)

GOLDEN = {
    ("test", 512): [
        "409e8a5950a3c4129b23d2bf375fba6ca8993f92bc63304da5da0157cf095178"
        "d16c971b718137927b060ab3293cbec6f89d4f7b6c5033cddcd4613b5120c9bb",
        "cd5ba5492da0a9dcee367b6a230e027dabbdc572fd3c667e385048f0bad36a7e"
        "a8e57cb8ed4bf8cdc3b7092dbad9f7fa5058f21a8f88437b3839f9232aada3ac",
    ],
    ("blake2b", 512): [
        "3acefabc8daaa8ce772072ed516b7afbd0a22b4e7c8e8231ba921f03cfac03e5"
        "9fe9915031bd2956992a9856339bb369c99638822049e46c0d054b448c58e4c6",
        "0fadb7d7265154133255a746df4cea492dec518620b2867b03224f62b4a69e99"
        "68ce71d2fdc4bf5386e12c39387593b3100671870d5a3255bb9296694d4246f0",
    ],
    ("test", 64): ["84c0c8a4669704e7", "bc0afb41800cb66d"],
}


def ref_hash(hash_id, w, data, seed=0):
    if hash_id == "blake2b":
        return hashlib.blake2b(data, digest_size=w // 8).digest()
    return hashlib.shake_256(b"pebblehash-test-oracle" + struct.pack("<Q", seed) + data).digest(w // 8)


def ref_cylinder2(hash_id, w):
    """Independent unrolling of the labeling of cylinder(2)."""
    z = bytes(w // 8)
    H = lambda tag, v, body: ref_hash(hash_id, w, bytes([tag]) + v.to_bytes(8, "little") + body)
    L = [H(1, 0, z), H(1, 1, z)]
    for lvl in range(1, 4):
        a, b = L[2 * lvl - 2], L[2 * lvl - 1]
        L += [H(2, 2 * lvl, a + b), H(2, 2 * lvl + 1, a + b)]
    return [L[6].hex(), L[7].hex()]


@pytest.mark.parametrize("key", sorted(GOLDEN))
def test_golden_vectors(key):
    hash_id, w = key
    spec = OracleSpec(w, hash_id)
    table = h1(ConstructionParams("cylinder", 2), Oracle(spec), bytes(w // 8))
    assert [x.hex() for x in table.labels] == GOLDEN[key] == ref_cylinder2(hash_id, w)


def test_single_node_label(spec64):
    d = make_dag(1, [], [0])
    z = bytes(range(8))
    assert label(d, Oracle(spec64), z, 0) == ref_hash("test", 64, enc(1, 0) + z)


def test_pyramid2_apex_label(spec64):
    d = pyramid(2)
    z = bytes(8)
    o = Oracle(spec64)
    l0, l1 = label(d, o, z, 0), label(d, o, z, 1)
    assert label(d, o, z, 2) == ref_hash("test", 64, enc(2, 2) + l0 + l1)


def test_label_memo_one_call_per_node(spec64):
    d = cylinder(3)
    o = Oracle(spec64)
    memo = {}
    for t in d.targets:
        label(d, o, bytes(8), t, memo)
    assert o.calls == d.node_count
    o2 = Oracle(spec64)
    h1(d, o2, bytes(8))
    assert o2.calls == d.node_count


def test_avalanche():
    spec = OracleSpec(256, "test")
    d = cylinder(2)
    rng = random.Random(7)
    base = all_labels(d, Oracle(spec), bytes(32))
    flips, total = 0, 0
    for _ in range(100):
        z = rng.randbytes(32)
        lab = all_labels(d, Oracle(spec), z)
        for t in d.targets:
            flips += bin(int.from_bytes(lab[t], "big") ^ int.from_bytes(base[t], "big")).count("1")
            total += 256
    assert flips / total >= 0.45


def test_h1_deterministic_and_size(spec64):
    for h in (2, 3, 4):
        p = ConstructionParams("cylinder", h)
        a = h1(p, Oracle(spec64), bytes(8))
        b = h1(p, Oracle(spec64), bytes(8))
        assert a.to_bytes() == b.to_bytes()
        assert a.count == h and a.size_bits == 64 * h


def test_zeta_length_checked(spec64):
    with pytest.raises(ShfError):
        h1(cylinder(2), Oracle(spec64), bytes(7))


@pytest.mark.parametrize("h", [2, 3, 4])
def test_streaming_matches_h1(spec64, h):
    o = Oracle(spec64)
    assert h1_streaming(o, bytes(8), 64 * h, 128, 64, rows=2 * h).labels == h1(cylinder(h), o, bytes(8)).labels
    short = h1_streaming(o, bytes(8), 64 * h, 128, 64)
    assert short.labels == h1(cylinder(h, levels=h), o, bytes(8)).labels


def test_streaming_wider_window(spec64):
    w, rows = 5, 4
    edges = [(r * w + (c - k) % w, (r + 1) * w + c) for r in range(rows - 1) for c in range(w) for k in range(3)]
    d = make_dag(w * rows, edges, list(range(w * (rows - 1), w * rows)), max_in_degree=3)
    o = Oracle(spec64)
    assert h1_streaming(o, bytes(8), 64 * w, 192, 64, rows=rows).labels == h1(d, o, bytes(8)).labels


@pytest.mark.parametrize("l, i, n, calls", [(256, 128, 64, 16), (512, 128, 64, 64), (384, 192, 64, 18)])
def test_streaming_hash_calls(spec64, l, i, n, calls):
    o = Oracle(spec64)
    h1_streaming(o, bytes(8), l, i, n)
    assert o.calls == streaming_hash_calls(l, i, n) == calls == l * l // (n * i - n * n)


@pytest.mark.parametrize("l, i, n", [(256, 64, 64), (256, 32, 64), (200, 128, 64), (256, 128, 32)])
def test_streaming_errors(spec64, l, i, n):
    with pytest.raises(ShfError):
        h1_streaming(Oracle(spec64), bytes(8), l, i, n)


def test_table_roundtrip(spec64):
    t = h1(ConstructionParams("cylinder", 3), Oracle(spec64), bytes(8))
    data = t.to_bytes()
    assert data[:5] == b"SHFR1" and len(data) == 5 + 12 + 32 + 3 * 8
    assert StaticTable.from_bytes(data) == t
    for bad in (b"XXXXX" + data[5:], data[:-1], data[:20]):
        with pytest.raises(ShfError):
            StaticTable.from_bytes(bad)


def test_seek_oracle():
    t = StaticTable((b"a" * 8, b"b" * 8), 64, 64)
    s = SeekOracle(t)
    assert s(2) == b"b" * 8 and s(1) == b"a" * 8 and s.log == [2, 1]
    for bad in (0, 3):
        with pytest.raises(ShfError):
            s(bad)


def test_h2_singleton(spec64):
    t = StaticTable((bytes(range(8)),), 64, 64)
    x = bytes(7) + b"\x05"
    o = Oracle(spec64)
    rho1 = ref_hash("test", 64, b"\x03" + bytes(7) + b"\x06")
    assert h2(t, o, x) == bytes(a ^ b for a, b in zip(bytes(range(8)), rho1))
    assert o.calls == 2


def test_h2_wraps_all_ones(spec64):
    t = StaticTable((bytes(8),), 64, 64)
    out = h2(t, Oracle(spec64), b"\xff" * 8)
    assert out == ref_hash("test", 64, b"\x03" + bytes(8))


def test_h2_deterministic_and_length():
    spec = OracleSpec(512, "blake2b")
    t = h1(ConstructionParams("cylinder", 3), Oracle(spec), bytes(64))
    x = bytes(63) + b"\x01"
    assert h2(t, Oracle(spec), x) == h2(t, Oracle(spec), x)
    assert len(h2(t, Oracle(spec), x)) == 64


def test_h2q_lengths_and_qprime_one():
    spec = OracleSpec(512, "test", truncate_to=128)
    t = h1(ConstructionParams("cylinder", 5), Oracle(spec), bytes(64))
    assert t.label_bits == 128
    o = Oracle(spec)
    out = h2_q(t, o, bytes(64), 4)
    assert len(out) == 64
    with pytest.raises(ShfError):
        h2_q(t, Oracle(spec), bytes(64), 2)
    with pytest.raises(ShfError):
        h2(t, Oracle(spec), bytes(64))
    full = OracleSpec(512, "test")
    tf = h1(ConstructionParams("cylinder", 3), Oracle(full), bytes(64))
    x = bytes(range(64))
    assert h2_q(tf, Oracle(full), x, 1) == h2(tf, Oracle(full), x)


def test_h2q_distinct_words():
    spec = OracleSpec(512, "test", truncate_to=64)
    words = 40
    t = StaticTable(tuple(i.to_bytes(8, "big") for i in range(words)), 64, 512)
    rng = random.Random(3)
    distinct, trials, q = 0, 300, 8
    for _ in range(trials):
        seek = SeekOracle(t)
        h2_q(seek, Oracle(spec), rng.randbytes(64), q)
        distinct += len(set(seek.log))
    # expected distinct draws of q from N is N(1 - (1 - 1/N)^q)
    expect = words * (1 - (1 - 1 / words) ** q)
    assert abs(distinct / trials - expect) < 0.15


def test_index_stream_expands(spec64):
    o = Oracle(spec64)
    s = IndexStream(o, bytes(8))
    vals = [s.draw(10) for _ in range(5)]
    assert all(1 <= v <= 10 for v in vals)
    assert s.expansions >= 4
    assert sample_indices(Oracle(spec64), bytes(8), 10, 3) == sample_indices(Oracle(spec64), bytes(8), 10, 3)


@pytest.mark.parametrize("kw", [dict(word_bits=60), dict(hash_id="md5"), dict(word_bits=1024),
                                dict(truncate_to=100), dict(truncate_to=12, word_bits=48)])
def test_oracle_spec_errors(kw):
    with pytest.raises(ShfError):
        OracleSpec(**kw)


def test_test_oracle_seeds_differ():
    a = Oracle(OracleSpec(64, "test", seed=0))(b"x")
    b = Oracle(OracleSpec(64, "test", seed=1))(b"x")
    assert a != b

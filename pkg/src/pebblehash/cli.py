"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 invalid input or rule violation,
3 search budget exceeded.

Tabular results go to stdout as CSV (with a header row) or JSON, selected
by the global --format flag. JSON records carry exactly the CSV columns.
Files:
  PGRAPH1  graph        (gen --out, --graph inputs)
  PSTRAT1  strategy     (solve --witness, pebble --strategy)
  SHFR1    static table (shf-setup --out, shf-eval --table)
  PTRACE1  query trace  (audit --trace / --record)
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import click

from . import audit as audit_mod
from . import constructions as cons
from . import engine, shf, solver
from .graph import GraphError, deserialize, serialize, validate

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_BUDGET = 0, 1, 2, 3


class Violation(click.ClickException):
    exit_code = EXIT_VIOLATION


class Budget(click.ClickException):
    exit_code = EXIT_BUDGET


def _cell(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return v


def emit(ctx: click.Context, rows: list[dict], csv_path: str | None = None) -> None:
    """Write rows to stdout in the chosen format, and to csv_path as CSV."""
    rows = [{k: _cell(v) for k, v in r.items()} for r in rows]
    if not rows:
        return
    fields = list(rows[0])
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(rows, indent=None, default=str))
    else:
        click.echo(buf.getvalue(), nl=False)
    if csv_path:
        _out_path(ctx, csv_path).write_text(buf.getvalue())


def _out_path(ctx: click.Context, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute() and ctx.obj["out_dir"]:
        p = Path(ctx.obj["out_dir"]) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _load_graph(path: str):
    try:
        d = deserialize(Path(path).read_bytes())
    except GraphError as e:
        raise Violation(f"{path}: {e}")
    bad = validate(d)
    if bad:
        raise Violation(f"{path}: invalid graph: {bad}")
    return d


def _hex(value: str, what: str) -> bytes:
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise click.BadParameter(f"{what} must be hex") from None


_MODES = {"seq": engine.SEQUENTIAL, "par": engine.PARALLEL}


def construction_options(f):
    opts = [
        click.option("--family", type=click.Choice(cons.FAMILIES), required=True),
        click.option("--h", "h", type=int, default=2, show_default=True,
                     help="Height h, or s for time-optimal/layered-transform, or length for path."),
        click.option("--a", default=None), click.option("--b", default=None),
        click.option("--c", default=None),
        click.option("--c1", type=int, default=2, show_default=True),
        click.option("--targets", type=int, default=1, show_default=True,
                     help="Composite-binary-tree target count."),
        click.option("--levels", type=int, default=None, help="Cylinder level count (default 2h)."),
        click.option("--n", "n", type=int, default=None, help="Crossover size (default --h)."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _params(family, h, a, b, c, c1, targets, levels, n) -> cons.ConstructionParams:
    try:
        return cons.ConstructionParams(family, h, a, b, c, c1, targets, levels, n)
    except (GraphError, ValueError, ZeroDivisionError) as e:
        raise click.BadParameter(str(e)) from None


def _build(p: cons.ConstructionParams):
    try:
        return cons.build(p)
    except GraphError as e:
        raise click.BadParameter(str(e)) from None


def oracle_options(f):
    f = click.option("--truncate", type=int, default=None, help="Label size in bits (q'').")(f)
    f = click.option("--w", "word_bits", type=int, default=512, show_default=True, help="Oracle output bits.")(f)
    f = click.option("--hash", "hash_id", type=click.Choice(shf.HASH_IDS), default="blake2b",
                     show_default=True, help="'test' is the seeded shake-256 test oracle.")(f)
    return f


def _spec(ctx, hash_id, word_bits, truncate) -> shf.OracleSpec:
    try:
        return shf.OracleSpec(word_bits, hash_id, truncate, ctx.obj["seed"])
    except shf.ShfError as e:
        raise click.BadParameter(str(e)) from None


def _zeta(spec: shf.OracleSpec, value: str | None) -> bytes:
    z = bytes(spec.word_bytes) if value is None else _hex(value, "--zeta")
    if len(z) != spec.word_bytes:
        raise click.BadParameter(f"--zeta must be {spec.word_bits} bits")
    return z


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the test oracle.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for relative output paths.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.pass_context
def cli(ctx, seed, out_dir, fmt):
    """Pebbling games, hard graph families and the static memory-hard hash.

    \b
    Files:
      PGRAPH1  graph          gen --out, --graph
      PSTRAT1  strategy       solve --witness, pebble --strategy
      SHFR1    static table   shf-setup --out, shf-eval --table
      PTRACE1  query trace    audit --trace, audit --save-trace
    Tables go to stdout as csv (header row first) or json with the same
    columns. Exit codes: 0 ok, 1 usage, 2 invalid input or violation,
    3 search budget exceeded.
    """
    ctx.obj = {"seed": seed, "out_dir": out_dir, "format": fmt}


@cli.command()
@construction_options
@click.option("--out", required=True, help="PGRAPH1 output file.")
@click.pass_context
def gen(ctx, out, **kw):
    """Generate a graph. Columns: family, nodes, edges, sources, targets, depth, file."""
    d = _build(_params(**kw))
    path = _out_path(ctx, out)
    path.write_bytes(serialize(d))
    emit(ctx, [{"family": kw["family"], "nodes": d.node_count, "edges": len(d.edges),
                "sources": len(d.sources), "targets": len(d.targets), "depth": d.depth,
                "file": str(path)}])


@cli.command()
@click.option("--graph", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--game", type=click.Choice(["std", "magic"]), default="std", show_default=True)
@click.option("--mbound", type=int, default=None, help="Magic pebble bound (default unbounded).")
@click.option("--mode", type=click.Choice(list(_MODES)), default="seq", show_default=True)
@click.option("--max-states", type=int, default=5_000_000, show_default=True)
@click.option("--max-seconds", type=float, default=600.0, show_default=True)
@click.option("--max-pebbles", type=int, default=None)
@click.option("--no-slides", is_flag=True, help="Forbid the slide rule.")
@click.option("--csv", "csv_path", default=None, help="Also write the result row here.")
@click.option("--witness", default=None, help="Write the witness strategy (PSTRAT1) here.")
@click.pass_context
def solve(ctx, graph, game, mbound, mode, max_states, max_seconds, max_pebbles, no_slides,
          csv_path, witness):
    """Exact minimum space. Prints space=K (or magic_space=K) and the witness,
    then a row: game, mode, space, time, states."""
    d = _load_graph(graph)
    try:
        budget = solver.SearchBudget(max_pebbles, max_states, max_seconds)
    except ValueError as e:
        raise click.BadParameter(str(e)) from None
    try:
        if game == "std":
            res = solver.min_space_standard(d, mode=_MODES[mode], budget=budget, slides=not no_slides)
        else:
            res = solver.min_space_magic(d, mbound=mbound, mode=_MODES[mode], budget=budget,
                                         slides=not no_slides)
    except solver.BudgetExceeded as e:
        raise Budget(f"{e}; proven lower bound {e.lower_bound}")
    text = engine.format_strategy(res.witness, d)
    click.echo(f"{'space' if game == 'std' else 'magic_space'}={res.space}")
    if witness:
        _out_path(ctx, witness).write_text(text)
    else:
        click.echo(text, nl=False)
    emit(ctx, [{"game": game, "mode": mode, "space": res.space, "time": res.witness.time,
                "states": res.states}], csv_path)


def _alphas(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(int(tok) if tok.isdigit() else float(tok))
        except ValueError:
            raise click.BadParameter(f"bad alpha {tok!r}") from None
    return out


@cli.command()
@click.option("--graph", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(list(_MODES)), default="seq", show_default=True)
@click.option("--alphas", default="1,2", show_default=True)
@click.option("--graph-space", type=int, default=None, help="Known P_s for graph-optimal measures.")
@click.option("--no-slides", is_flag=True)
@click.option("--csv", "csv_path", default=None)
@click.pass_context
def pebble(ctx, graph, strategy, mode, alphas, graph_space, no_slides, csv_path):
    """Validate a PSTRAT1 strategy and report its measures (space, time,
    magic_used, magic_space, sustained_L, delta_subopt_D, pcc_A)."""
    d = _load_graph(graph)
    try:
        strat = engine.parse_strategy(Path(strategy).read_text(), d)
    except engine.StrategyError as e:
        raise Violation(str(e))
    bad = engine.validate(d, strat, mode=_MODES[mode], slides=not no_slides)
    if bad:
        raise Violation(f"invalid strategy: {bad}")
    rep = engine.measure(d, strat, _alphas(alphas), mode=_MODES[mode], slides=not no_slides,
                         graph_space=graph_space)
    emit(ctx, [rep.as_row()], csv_path)


@cli.command()
@construction_options
@click.option("--strategy", "named", type=click.Choice(["genpeb", "trivial", "wavefront", "p1", "p2"]),
              required=True)
@click.option("--alphas", default="1,2", show_default=True)
@click.option("--s1", type=int, default=2, show_default=True, help="P1 space.")
@click.option("--crossover", is_flag=True, help="Also bisect the alpha where P1 overtakes P2.")
@click.option("--csv", "csv_path", default=None)
@click.pass_context
def measure(ctx, named, alphas, s1, crossover, csv_path, **kw):
    """Measure a built-in strategy on a generated graph (parallel mode)."""
    p = _params(**kw)
    d = _build(p)
    info = {}
    try:
        if named in ("p1", "p2") or crossover:
            if p.family != "cc-alpha-crossover":
                raise click.BadParameter("p1/p2 need --family cc-alpha-crossover")
            lay = cons.cc_alpha_crossover_layout(p.n or p.h_or_s, p.a, p.b, p.c)
            p1 = solver.p1_constant_space(lay, s1)
            p2 = solver.p2_linear_time(lay)
            if crossover:
                info["crossover_alpha"] = solver.crossover_alpha(p1, p2)
        if named == "genpeb":
            strat, gi = solver.genpeb(d, 1.0)
            info["s_size"] = len(gi.s_set)
            info["depth_target"] = gi.depth_target
        elif named == "trivial":
            strat = solver.trivial_sweep(d)
        elif named == "wavefront":
            if p.family != "cylinder":
                raise click.BadParameter("wavefront needs --family cylinder")
            strat = solver.wavefront_cylinder(p.h_or_s, p.levels)
        else:
            strat = p1 if named == "p1" else p2
    except (ValueError, GraphError) as e:
        if isinstance(e, click.BadParameter):
            raise
        raise Violation(str(e))
    mode = engine.SEQUENTIAL if named in ("p1", "p2") else engine.PARALLEL
    rep = engine.measure(d, strat, _alphas(alphas), mode=mode)
    emit(ctx, [{"family": p.family, "strategy": named, "nodes": d.node_count, **rep.as_row(), **info}],
         csv_path)


@cli.command("shf-setup")
@construction_options
@oracle_options
@click.option("--zeta", default=None, help="Hex seed input (default all zero).")
@click.option("--out", required=True, help="SHFR1 output file.")
@click.pass_context
def shf_setup(ctx, hash_id, word_bits, truncate, zeta, out, **kw):
    """Build the static table. Columns: labels, label_bits, table_bytes, hash_calls, seconds, file."""
    spec = _spec(ctx, hash_id, word_bits, truncate)
    p = _params(**kw)
    _build(p)
    oracle = shf.Oracle(spec)
    t0 = time.perf_counter()
    table = shf.h1(p, oracle, _zeta(spec, zeta))
    dt = time.perf_counter() - t0
    path = _out_path(ctx, out)
    data = table.to_bytes()
    path.write_bytes(data)
    emit(ctx, [{"labels": table.count, "label_bits": table.label_bits, "table_bytes": len(data),
                "hash_calls": oracle.calls, "seconds": round(dt, 6), "file": str(path)}])


@cli.command("shf-eval")
@click.option("--table", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--x", "x", required=True, help="Hex input of w bits.")
@click.option("--qprime", type=int, default=None, help="Number of truncated lookups.")
@click.option("--hash", "hash_id", type=click.Choice(shf.HASH_IDS), default="blake2b", show_default=True)
@click.pass_context
def shf_eval(ctx, table, x, qprime, hash_id):
    """Evaluate H2 (or H2 with q' lookups). Columns: x, output, indices, oracle_calls."""
    try:
        tab = shf.StaticTable.from_bytes(Path(table).read_bytes())
    except shf.ShfError as e:
        raise Violation(str(e))
    truncate = tab.label_bits if tab.label_bits != tab.word_bits else None
    spec = _spec(ctx, hash_id, tab.word_bits, truncate)
    xb = _hex(x, "--x")
    if len(xb) != spec.word_bytes:
        raise click.BadParameter(f"--x must be {spec.word_bits} bits ({spec.word_bytes} bytes)")
    oracle = shf.Oracle(spec)
    seek = shf.SeekOracle(tab)
    try:
        if qprime is None:
            y = shf.h2(seek, oracle, xb)
        else:
            y = shf.h2_q(seek, oracle, xb, qprime)
    except shf.ShfError as e:
        raise click.BadParameter(str(e)) from None
    emit(ctx, [{"x": x, "output": y.hex(), "indices": " ".join(map(str, seek.log)),
                "oracle_calls": oracle.calls}])


@cli.command()
@click.option("--graph", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", default=None, help="PTRACE1 file to audit.")
@click.option("--zeta", default=None, help="Hex seed input (default all zero).")
@oracle_options
@click.option("--record", type=click.Choice(["honest", "adversary"]), default=None,
              help="Instead of reading --trace, run an evaluator and audit its trace.")
@click.option("--inject", default="", help="Adversary: comma-separated nodes read from a hint.")
@click.option("--declared-bits", type=int, default=0, help="Adversary hint size |x| in bits.")
@click.option("--save-trace", default=None, help="Write the recorded trace here.")
@click.pass_context
def audit(ctx, graph, trace, zeta, hash_id, word_bits, truncate, record, inject, declared_bits,
          save_trace):
    """Ex-post-facto pebbling of a query trace. Columns: legal, goal_met,
    magic_used, chi, flagged, peak, steps, matched, unmatched, violation, timeline."""
    d = _load_graph(graph)
    spec = _spec(ctx, hash_id, word_bits, truncate)
    z = _zeta(spec, zeta)
    if (trace is None) == (record is None):
        raise click.UsageError("give exactly one of --trace or --record")
    if trace:
        try:
            qt = audit_mod.QueryTrace.from_text(Path(trace).read_text())
        except audit_mod.TraceError as e:
            raise Violation(str(e))
    else:
        oracle = audit_mod.TracingOracle(spec, declared_bits)
        if record == "honest":
            audit_mod.honest_levelwise(d, oracle, z)
        else:
            try:
                nodes = [int(t) for t in inject.split(",") if t.strip()]
            except ValueError:
                raise click.BadParameter("--inject takes node indices") from None
            audit_mod.scripted_adversary(d, oracle, z, nodes)
        qt = oracle.trace
        if save_trace:
            _out_path(ctx, save_trace).write_text(qt.to_text())
    try:
        rep = audit_mod.audit_trace(d, shf.Oracle(spec), z, qt)
    except audit_mod.TraceError as e:
        raise Violation(str(e))
    emit(ctx, [{**rep.as_row(), "timeline": " ".join(map(str, rep.timeline))}])
    if not rep.legal:
        raise Violation(f"ex-post-facto pebbling is illegal: {rep.violation}")


@cli.command()
@click.option("--out-bits", type=int, default=64, show_default=True, help="n: hash output bits.")
@click.option("--in-bits", type=int, default=128, show_default=True, help="i: hash input bits.")
@click.option("--row-bits", default="256,512,1024", show_default=True,
              help="Comma-separated l values (multiples of n).")
@click.option("--evals", type=int, default=200, show_default=True, help="H2 evaluations to time.")
@click.option("--csv", "csv_path", default=None)
@click.pass_context
def bench(ctx, out_bits, in_bits, row_bits, evals, csv_path):
    """Row-streaming setup and H2 timing. Columns: h, row_bits, hash_calls,
    expected_calls, setup_seconds, eval_microseconds, h2_calls, table_bytes."""
    spec = _spec(ctx, "test", out_bits, None)
    rows = []
    for tok in row_bits.split(","):
        try:
            l = int(tok)
        except ValueError:
            raise click.BadParameter(f"bad row size {tok!r}") from None
        oracle = shf.Oracle(spec)
        t0 = time.perf_counter()
        try:
            table = shf.h1_streaming(oracle, bytes(spec.word_bytes), l, in_bits, out_bits)
        except shf.ShfError as e:
            raise click.BadParameter(str(e)) from None
        setup = time.perf_counter() - t0
        calls = oracle.calls
        ev = shf.Oracle(spec)
        t0 = time.perf_counter()
        for k in range(evals):
            shf.h2(table, ev, k.to_bytes(spec.word_bytes, "big"))
        per = (time.perf_counter() - t0) / max(evals, 1) * 1e6
        rows.append({"h": l // out_bits, "row_bits": l, "hash_calls": calls,
                     "expected_calls": shf.streaming_hash_calls(l, in_bits, out_bits),
                     "setup_seconds": round(setup, 6), "eval_microseconds": round(per, 3),
                     "h2_calls": ev.calls / max(evals, 1), "table_bytes": len(table.to_bytes())})
    emit(ctx, rows, csv_path)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="pebblehash", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

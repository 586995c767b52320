import pytest

from pebblehash.constructions import (ConstructionParams, build, cc_alpha_crossover, composite_binary_tree,
                                      cylinder, path, pyramid, time_optimal)
from pebblehash.shf import OracleSpec

# Results of the acceptance criteria, filled by tests/test_acceptance.py.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def corpus():
    """Small graphs used across modules."""
    return [
        path(8), pyramid(4), cylinder(2), cylinder(3), cylinder(6),
        composite_binary_tree(3, 2), time_optimal(3), time_optimal(5, 6),
        cc_alpha_crossover(16, "1/4", "2/3", "2/3"),
        build(ConstructionParams("layered-transform", 3)),
    ]


@pytest.fixture
def spec64():
    return OracleSpec(64, "test", seed=0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

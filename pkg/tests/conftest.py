import dataclasses

import pytest

from ftsplan.domains import Goal, build_problem, trace_scenario


@pytest.fixture
def running_problem():
    """1D pick-and-place with two objects on the right table; A must reach
    the left table and the robot must return home.

    Used for skeleton analysis only: with the single grasp the placed object
    ends up between the robot and home, so this goal is unreachable.
    """
    sc = trace_scenario("pickplace")
    sc = dataclasses.replace(sc, goal=Goal(regions=sc.goal.regions, conf=(0.0,)))
    return build_problem(sc)


@pytest.fixture
def manipulation_problem():
    return build_problem(trace_scenario("manipulation"))


@pytest.fixture
def pickplace_problem():
    return build_problem(trace_scenario("pickplace"))


_acceptance_lines = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)

"""The thirteen acceptance criteria, one test each.

Each result line is printed as the test runs (visible with ``-s``) and again
in the terminal summary, so a plain ``pytest`` run shows one PASS/FAIL line
per criterion.
"""
import pytest

from ctxobs.acceptance import CHECKS, run_check

RESULTS = []


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__.removeprefix("check_") for c in CHECKS])
def test_criterion(check):
    result = run_check(check)
    RESULTS.append(result)
    print(result.line())
    assert result.passed, result.detail


def test_total_runtime_under_a_minute():
    if len(RESULTS) != len(CHECKS):
        pytest.skip("needs the full set of criteria in this session")
    total = sum(r.seconds for r in RESULTS)
    assert total < 60, f"acceptance suite took {total:.1f}s"

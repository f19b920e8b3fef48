"""Acceptance criteria 1-14 at full size.

Each test runs one criterion and records a one-line verdict; the lines are
printed in the terminal summary (see ``conftest.py``) and, when run as a
script, directly.
"""

import sys

import pytest

from approachlab.suites import CRITERIA, run_criterion

RESULTS = []


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda k: f"{k:02d}-{CRITERIA[k]}")
def test_criterion(number):
    result = run_criterion(number)
    RESULTS.append(result.line())
    print(result.line())
    failing = [c for c in result.checks if not c.ok]
    assert result.passed, result.error or "; ".join(str(c) for c in failing[:5])


if __name__ == "__main__":
    ok = True
    for k in sorted(CRITERIA):
        r = run_criterion(k)
        print(r.line(), flush=True)
        ok &= r.passed
    sys.exit(0 if ok else 1)

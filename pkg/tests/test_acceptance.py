"""The thirteen acceptance criteria, one PASS/FAIL line each.

The lines appear in the terminal summary of any pytest run that includes this
module; ``python tests/test_acceptance.py`` prints them directly.
"""

import pytest

from qcurve import acceptance

OUTCOMES = []


@pytest.mark.parametrize("number", [n for n, _, _ in acceptance.CRITERIA])
def test_criterion(number):
    outcome = acceptance.run_one(number)
    OUTCOMES.append(outcome)
    print(outcome.line())
    assert outcome.ok, outcome.details


if __name__ == "__main__":
    results = acceptance.run_all()
    for o in results:
        print(o.line())
    raise SystemExit(0 if all(o.ok for o in results) else 1)

"""Every acceptance criterion at its stated size and tolerance.

Each test prints one PASS/FAIL line; the lines are repeated together in the
terminal summary.  Criteria that do not hold at the prescribed sizes are
marked ``xfail`` with the reason; their lines still read FAIL.
"""

import pytest

from growing_walks.acceptance import DIAGNOSTICS, run_criterion

from .conftest import ACCEPTANCE_LINES

SEED = 1
KNOWN = {
    5: "at T = a^3 the direct-hit term of order a^(2-d) keeps the a=8 estimate more than twice the a=32 one",
    8: "about 5% of seeds exceed the 1.15 outer bound at M = 1e4, so 19 of 20 is not reached for this seed",
}


def _params():
    for n in range(1, 13):
        marks = [pytest.mark.xfail(reason=KNOWN[n], strict=True)] if n in KNOWN else []
        yield pytest.param(n, marks=marks, id=f"AC{n}")


@pytest.mark.slow
@pytest.mark.parametrize("n", list(_params()))
def test_criterion(n, capsys):
    res = run_criterion(n, seed=SEED, workers=1)
    line = res.line() + f"  [{res.seconds:.0f}s]"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
        if n in DIAGNOSTICS:
            print("     " + DIAGNOSTICS[n](seed=SEED, workers=1))
    assert res.passed, res.detail

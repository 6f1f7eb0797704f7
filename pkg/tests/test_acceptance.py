"""Acceptance criteria AC1 to AC10 at their stated sizes and tolerances.

Set ``ARQRADIO_QUICK=1`` for shrunken horizons (a smoke run, not a verdict).
"""

import os

import pytest
from conftest import ACCEPTANCE_LINES

from arqradio.experiments import RUNNERS

QUICK = os.environ.get("ARQRADIO_QUICK", "") not in ("", "0")


@pytest.mark.acceptance
@pytest.mark.parametrize("cid", list(RUNNERS))
def test_acceptance(cid):
    outcome = RUNNERS[cid](quick=QUICK)
    line = outcome.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    for note in outcome.notes:
        print("   ", note)
    failed = [k for k, v in outcome.checks.items() if not v]
    assert outcome.passed, f"{line}\nfailed checks: {failed[:20]}\nnotes: {outcome.notes}"

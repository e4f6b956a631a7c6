"""Acceptance suite: one test per criterion.

Each result line is also printed in the terminal summary (see conftest).
"""

from __future__ import annotations

import pytest

from mentalnav.acceptance import CRITERIA

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = CRITERIA[number]()
    ACCEPTANCE_LINES[number] = result.line()
    print(result.line())
    assert result.passed, result.detail

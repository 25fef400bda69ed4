from __future__ import annotations

import mpmath as mp
import pytest

from tfreud.kernel import PrecisionContext

# Tests parse decimal strings and compare values from different working
# precisions; a high ambient precision keeps that test-side arithmetic from
# polluting the comparisons.  Library code always sets its own precision.
mp.mp.prec = 1200


@pytest.fixture
def ctx256() -> PrecisionContext:
    return PrecisionContext(256)


@pytest.fixture
def ctx128() -> PrecisionContext:
    return PrecisionContext(128)


def mpf_close(a, b, tol) -> bool:
    return abs(mp.mpf(a) - mp.mpf(b)) <= mp.mpf(tol)

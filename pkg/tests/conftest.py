import math
from collections import Counter

import numpy as np
import pytest

from swa_ltv.geometry import Waveguide
from swa_ltv.ltv_core import SynthesisOptions

FS = 256e3
FS_SMALL = 16e3


@pytest.fixture
def wg():
    return Waveguide()


@pytest.fixture
def keep_all():
    """Synthesis options that retain every eigenpath."""
    return SynthesisOptions(energy_floor_db=-400.0)


def rel_dev(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.abs(a).max(initial=0), np.abs(b).max(initial=0))
    return np.abs(a - b).max(initial=0) / scale if scale else 0.0


def image_oracle(w, h_tx, h_rx, d, pmax):
    """Every source image at +-zs + 2 m w; reflection counts from the boundary planes crossed."""
    zs, zr = w - h_tx, w - h_rx
    out = []
    for m in range(-2 * pmax - 3, 2 * pmax + 4):
        for zi in (2 * m * w + zs, 2 * m * w - zs):
            lo, hi = min(zi, zr), max(zi, zr)
            planes = [j * w for j in range(-4 * pmax - 8, 4 * pmax + 9) if lo < j * w < hi]
            ns = sum(1 for p in planes if round(p / w) % 2 == 0)
            nb = len(planes) - ns
            if ns <= pmax and nb <= pmax:
                out.append((ns, nb, math.hypot(d, abs(zi - zr))))
    return Counter(out)


# acceptance results, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from infotransfer.events import EventStream  # noqa: E402

_ACCEPTANCE_LINES = []


def stream_from_bits(node_id, bits, width=1.0, origin=0.0):
    """One event in the middle of every occupied uniform bin."""
    bits = np.asarray(bits)
    times = origin + (np.flatnonzero(bits) + 0.5) * width
    return EventStream(node_id, times, horizon=origin + bits.size * width)


@pytest.fixture
def acceptance_report():
    def record(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

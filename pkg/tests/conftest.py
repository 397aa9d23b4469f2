import re

import numpy as np
import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(cid: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {cid:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        def key(line):
            m = re.match(r"criterion\s+(\d+)(\w*)", line)
            return int(m.group(1)), m.group(2)

        for line in sorted(_CRITERIA, key=key):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

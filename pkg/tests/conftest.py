import re

import numpy as np
import pytest

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, in criterion order."""
    rows = []
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and rep.when in ("call", "setup"):
                rows.append((int(m.group(1)), m.group(2).replace("_", " "), status.upper()))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, status in sorted(set(rows)):
        verdict = "PASS" if status == "PASSED" else "FAIL" if status in ("FAILED", "ERROR") else status
        terminalreporter.write_line(f"criterion {num:2d} {verdict}: {name}")

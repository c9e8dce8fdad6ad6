import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager that times one acceptance criterion and records PASS or FAIL."""
    results = request.config.stash.setdefault(_CRITERIA, [])

    @contextmanager
    def check(number: int, title: str, limit_s: float):
        notes: list[str] = []
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield notes
            elapsed = time.perf_counter() - t0
            assert elapsed < limit_s, f"runtime {elapsed:.1f}s exceeds {limit_s}s"
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - t0
            line = f"criterion {number:2d}: {status}  [{elapsed:6.1f}s / {limit_s:g}s]  {title}"
            print(line)
            results.append((number, line, notes))

    return check


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line, notes in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(line)
        for note in notes:
            terminalreporter.write_line("      " + note)

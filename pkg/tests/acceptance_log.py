"""Per-criterion PASS/FAIL lines collected by the acceptance tests."""
import time
from contextlib import contextmanager

LINES: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str, limit_s: float):
    """Record the outcome of one criterion; the time limit is asserted on exit."""
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit_s, f"runtime {elapsed:.2f} s exceeds {limit_s} s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        LINES[number] = f"criterion {number} FAIL ({elapsed:.2f} s): {title} -- {msg}"
        print(LINES[number])
        raise
    LINES[number] = f"criterion {number} PASS ({elapsed:.2f} s): {title}"
    print(LINES[number])

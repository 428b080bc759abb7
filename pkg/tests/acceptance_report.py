"""Collects one pass/fail line per acceptance criterion."""
import time
from contextlib import contextmanager

RESULTS = {}
STARTED = time.perf_counter()


@contextmanager
def criterion(number, title, limit=None):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        RESULTS[number] = (title, False, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}".splitlines()[0])
        raise
    elapsed = time.perf_counter() - t0
    if limit is not None and elapsed > limit:
        RESULTS[number] = (title, False, elapsed, f"runtime {elapsed:.1f}s exceeds {limit}s")
        raise AssertionError(f"criterion {number} took {elapsed:.1f}s (limit {limit}s)")
    RESULTS[number] = (title, True, elapsed, "")


def lines():
    out = []
    for n in sorted(RESULTS):
        title, ok, elapsed, note = RESULTS[n]
        tail = f"  ({note})" if note else ""
        out.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {elapsed:7.2f}s  {title}{tail}")
    return out

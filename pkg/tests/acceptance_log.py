"""Collects one verdict line per acceptance criterion for the terminal summary."""

import contextlib
import time

LINES = []


@contextlib.contextmanager
def criterion(number, title):
    start = time.perf_counter()
    notes = []
    try:
        yield notes
    except BaseException as exc:
        detail = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        LINES.append(f"FAIL  criterion {number}: {title} ({time.perf_counter() - start:.1f}s) :: {detail}")
        print(LINES[-1])
        raise
    extra = f" :: {'; '.join(notes)}" if notes else ""
    LINES.append(f"PASS  criterion {number}: {title} ({time.perf_counter() - start:.1f}s){extra}")
    print(LINES[-1])

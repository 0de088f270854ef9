"""Row-parallel evaluation over an immutable payload."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

__all__ = ["map_rows"]

_STATE: dict[str, Any] = {}


def _init(fn, payload):
    _STATE["fn"] = fn
    _STATE["payload"] = payload


def _call(i: int):
    return _STATE["fn"](_STATE["payload"], i)


def map_rows(fn: Callable[[Any, int], Any], n: int, threads: int = 1, payload: Any = None) -> list:
    """``[fn(payload, i) for i in range(n)]``, spread over ``threads`` worker processes.

    ``fn`` must be a module-level function.  Results come back in order, so
    output does not depend on the worker count.
    """
    if threads <= 1 or n < 2:
        return [fn(payload, i) for i in range(n)]
    chunk = max(1, n // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads, initializer=_init, initargs=(fn, payload)) as ex:
        return list(ex.map(_call, range(n), chunksize=chunk))

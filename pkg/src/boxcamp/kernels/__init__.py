"""Matching kernels with a compiled fast path.

``iou_matrix`` and ``greedy_assign`` are imported from the Cython extension
when it was built, otherwise from the numpy fallback. Call ``backend()`` to
see which one is active; ``available_backends()`` exposes both for the
equivalence tests and the benchmark.
"""

from __future__ import annotations

from boxcamp.kernels import _pure

try:
    from boxcamp.kernels import _speedups
except ImportError:
    _speedups = None

_active = _speedups if _speedups is not None else _pure

iou_matrix = _active.iou_matrix
greedy_assign = _active.greedy_assign


def backend() -> str:
    return _active.BACKEND_NAME


def available_backends() -> dict:
    out = {"pure": _pure}
    if _speedups is not None:
        out["compiled"] = _speedups
    return out

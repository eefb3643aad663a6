"""Data-oblivious computational geometry on an instrumented memory model.

All exported algorithms touch memory only through traced fixed-capacity
arrays, so the address trace of a run is a pure function of the input size
(and the random seed, for the randomized ones).  Trace equality across
same-size inputs is checkable with `trace_equal` and the audit tooling.
"""

from .tracing import BLANK, SeededRng, TracedArray, Tracer, TraceEvent, trace_equal
from .primitives import (CompactionOverflow, conditional_copy, oblivious_compact,
                         oblivious_sort)
from .anlv import AnlvResult, anlv, anlv_values, merge_via_anlv

__all__ = [
    "BLANK", "SeededRng", "TracedArray", "Tracer", "TraceEvent", "trace_equal",
    "CompactionOverflow", "conditional_copy", "oblivious_compact", "oblivious_sort",
    "AnlvResult", "anlv", "anlv_values", "merge_via_anlv",
]

"""Instrumented memory model: traced arrays, access traces, seeded randomness.

Every algorithm in this package reads and writes fixed-capacity arrays through
the :class:`TracedArray` interface.  Each access appends an event to the owning
:class:`Tracer` before the value moves, so the full address trace of a run can
be compared against the trace of another run.  Two runs on same-size inputs
must produce exactly equal traces; that equality is what the audit machinery
checks.

Cell contents never enter the trace, only ``(array id, index, read/write)``.

Arrays carry an optional *lane* dimension: a laned tracer executes L
independent same-size instances in lockstep, all sharing one literal access
sequence.  Data-dependent decisions are confined to per-lane constant-size
blackbox computations on values already held in registers.
"""

from __future__ import annotations

import numpy as np

# Sentinel cell value ordered after every real value by the default comparator.
# Real payloads must stay strictly below it.
BLANK = np.int64(1) << np.int64(62)

READ = 0
WRITE = 1

_KIND_CHAR = {READ: "r", WRITE: "w"}


class TraceEvent:
    """One recorded access: a contiguous chunk of (array, kind, indices).

    A chunk with k indices stands for k single-cell events in index order;
    the expansion is canonical, so chunk-wise equality coincides with
    event-wise equality for runs produced by this package.
    """

    __slots__ = ("array_id", "kind", "indices")

    def __init__(self, array_id: int, kind: int, indices: np.ndarray):
        self.array_id = array_id
        self.kind = kind
        self.indices = indices

    def __len__(self) -> int:
        return int(self.indices.size)

    def __repr__(self):
        return f"TraceEvent(a{self.array_id}, {_KIND_CHAR[self.kind]}, n={len(self)})"


class Tracer:
    """Owns the arrays of one execution and records their access sequence."""

    def __init__(self, lanes: int = 1):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        self.lanes = lanes
        self.events: list[TraceEvent] = []
        self._next_id = 0
        self.counters: dict[str, int] = {}

    # -- array construction -------------------------------------------------

    def array(self, capacity: int, fill: int = 0) -> "TracedArray":
        """Allocate a traced array of fixed capacity, filled with `fill`."""
        data = np.full((self.lanes, capacity), fill, dtype=np.int64)
        return self._wrap(data)

    def from_values(self, values) -> "TracedArray":
        """Allocate a traced array initialized from per-lane values.

        `values` is broadcast to shape (lanes, capacity).  Initialization is
        input loading and is not part of the trace.
        """
        arr = np.asarray(values, dtype=np.int64)
        if arr.ndim == 1:
            arr = np.broadcast_to(arr, (self.lanes, arr.shape[0]))
        if arr.ndim != 2 or arr.shape[0] != self.lanes:
            raise ValueError("values must have shape (capacity,) or (lanes, capacity)")
        return self._wrap(arr.copy())

    def _wrap(self, data: np.ndarray) -> "TracedArray":
        ta = TracedArray(self, self._next_id, data)
        self._next_id += 1
        return ta

    # -- recording ----------------------------------------------------------

    def record(self, array_id: int, kind: int, indices: np.ndarray) -> None:
        self.events.append(TraceEvent(array_id, kind, indices))

    def bump(self, name: str, amount: int = 1) -> None:
        """Count a non-trace statistic (e.g. restarts) for audit reports."""
        self.counters[name] = self.counters.get(name, 0) + amount

    # -- inspection ---------------------------------------------------------

    def trace_length(self) -> int:
        return sum(len(ev) for ev in self.events)

    def dump(self, limit: int | None = None):
        """Expand the trace, one `<array_id> <index> <r|w>` line per event."""
        out = []
        for ev in self.events:
            ch = _KIND_CHAR[ev.kind]
            for i in ev.indices.tolist():
                out.append(f"{ev.array_id} {i} {ch}")
                if limit is not None and len(out) >= limit:
                    return out
        return out


class TracedArray:
    """Fixed-capacity int64 value array; every access is recorded first.

    Shape is (lanes, capacity).  Index arguments address the capacity axis
    and apply to all lanes at once; they must be data-independent.
    """

    __slots__ = ("tracer", "id", "data")

    def __init__(self, tracer: Tracer, array_id: int, data: np.ndarray):
        self.tracer = tracer
        self.id = array_id
        self.data = data

    @property
    def capacity(self) -> int:
        return self.data.shape[1]

    @property
    def lanes(self) -> int:
        return self.data.shape[0]

    def _idx(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim == 0:
            idx = idx.reshape(1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.capacity):
            raise IndexError(f"index out of range for capacity {self.capacity}")
        return idx

    def read(self, indices) -> np.ndarray:
        """Read cells; returns shape (lanes, len(indices))."""
        idx = self._idx(indices)
        self.tracer.record(self.id, READ, idx)
        return self.data[:, idx]

    def write(self, indices, values) -> None:
        """Write cells; `values` broadcasts to (lanes, len(indices))."""
        idx = self._idx(indices)
        self.tracer.record(self.id, WRITE, idx)
        self.data[:, idx] = values

    def read_all(self) -> np.ndarray:
        return self.read(np.arange(self.capacity))

    def write_all(self, values) -> None:
        self.write(np.arange(self.capacity), values)

    # Untraced view for loading results out of a finished computation.
    def unload(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self):
        return f"TracedArray(id={self.id}, lanes={self.lanes}, capacity={self.capacity})"


def trace_equal(t1, t2) -> bool:
    """Exact pointwise equality of two traces (array id, index, kind).

    Accepts Tracer instances or event lists.  Step numbers are implied by
    order.  Equality is exact, never distributional.
    """
    e1 = t1.events if isinstance(t1, Tracer) else list(t1)
    e2 = t2.events if isinstance(t2, Tracer) else list(t2)
    if sum(len(e) for e in e1) != sum(len(e) for e in e2):
        return False
    # Chunk boundaries are control-flow determined; compare the canonical
    # expansions chunk by chunk, re-chunking lazily if boundaries disagree.
    i1 = _ChunkCursor(e1)
    i2 = _ChunkCursor(e2)
    while True:
        a = i1.next_span()
        b = i2.next_span()
        if a is None or b is None:
            return a is None and b is None
        n = min(a[3], b[3])
        if a[0] != b[0] or a[1] != b[1]:
            return False
        if not np.array_equal(a[2][a[4]:a[4] + n], b[2][b[4]:b[4] + n]):
            return False
        i1.advance(n)
        i2.advance(n)


class _ChunkCursor:
    def __init__(self, events):
        self.events = events
        self.pos = 0
        self.off = 0

    def next_span(self):
        while self.pos < len(self.events) and self.off >= len(self.events[self.pos]):
            self.pos += 1
            self.off = 0
        if self.pos >= len(self.events):
            return None
        ev = self.events[self.pos]
        return (ev.array_id, ev.kind, ev.indices, len(ev) - self.off, self.off)

    def advance(self, n):
        self.off += n


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class SeededRng:
    """Deterministic splitmix64 generator: same seed, same stream, anywhere.

    Draws are counter-based so a batch of k values equals k single draws.
    """

    def __init__(self, seed: int, algorithm: str = "splitmix64"):
        if algorithm != "splitmix64":
            raise ValueError(f"unknown rng algorithm: {algorithm}")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.algorithm = algorithm
        self._counter = np.uint64(0)

    def u64(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit values."""
        idx = self._counter + np.arange(1, count + 1, dtype=np.uint64)
        self._counter += np.uint64(count)
        z = np.uint64(self.seed) + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def bits(self, count: int) -> np.ndarray:
        """Next `count` uniform bits as int64 0/1."""
        return (self.u64(count) >> np.uint64(63)).astype(np.int64)

    def below(self, bound: int, count: int) -> np.ndarray:
        """Next `count` integers uniform on [0, bound) (multiply-shift map)."""
        hi = (self.u64(count).astype(object) * int(bound)) >> 64
        return np.array([int(v) for v in hi], dtype=np.int64)

    def spawn(self) -> "SeededRng":
        """Derive an independent generator; used for restart-with-fresh-seed."""
        return SeededRng(int(self.u64(1)[0]))

"""Trajectory serialization and deterministic CSV output.

Binary layout (little endian): int64 N, float64 L, int64 count, then
count * N complex samples stored as interleaved (re, im) float64 pairs.
Times are not part of the binary layout; they travel in the series CSV.
"""

import csv
import struct

import numpy as np

from hnls._validation import ValidationError
from hnls.core import Trajectory, make_grid

_HEADER = struct.Struct("<qdq")


def fmt(v):
    return f"{float(v):.17g}"


def write_trajectory_binary(traj, path):
    states = np.ascontiguousarray(traj.states, dtype="<c16")
    count, N = states.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(N, traj.grid.half_width, count))
        fh.write(states.view("<f8").tobytes())


def read_trajectory_binary(path, times=None):
    """Inverse of write_trajectory_binary; ``times`` defaults to 0, 1, 2, ..."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValidationError("truncated trajectory header")
    N, L, count = _HEADER.unpack_from(raw)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * N * count:
        raise ValidationError(f"expected {2 * N * count} doubles, found {body.size}")
    states = body.view("<c16").reshape(count, N).astype(complex)
    t = np.arange(count, dtype=float) if times is None else np.asarray(times, dtype=float)
    return Trajectory(make_grid(L, int(N)), t, states)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_trajectory_csv(traj, path):
    """Long-format CSV (t, x, re, im); intended for small N."""
    x = traj.grid.x
    rows = ((t, xj, v.real, v.imag) for t, state in zip(traj.times, traj.states)
            for xj, v in zip(x, state))
    write_csv(path, ["t", "x", "re", "im"], rows)


__all__ = [
    "fmt",
    "write_trajectory_binary",
    "read_trajectory_binary",
    "write_csv",
    "write_trajectory_csv",
]

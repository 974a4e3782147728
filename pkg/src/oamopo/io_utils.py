"""Deterministic file output: CSV tables, JSON summaries, 16-bit PGM images.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs produce bit-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import TRAJECTORY_COLUMNS, Trajectory, trajectory_rows
from .interference import IntensityMap


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")  # RFC 4180 line ends
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def write_trajectory_csv(path, traj: Trajectory) -> None:
    write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_pgm(path, imap: IntensityMap) -> None:
    """Binary 16-bit PGM (P5, maxval 65535), linearly scaled to frame max."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    peak = float(np.max(imap.values))
    if peak > 0:
        scaled = np.round(imap.values / peak * 65535.0)
    else:
        scaled = np.zeros_like(imap.values)
    data = scaled.astype(">u2")  # network byte order per the format
    header = f"P5\n{imap.grid.n} {imap.grid.n}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Inverse of :func:`write_pgm` (for tests and round-trips)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError("not a binary PGM file")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        dtype = ">u2" if maxval > 255 else "u1"
        data = np.frombuffer(fh.read(), dtype=dtype, count=width * height)
    return data.reshape(height, width).astype(float)


def write_intensity_csv(path, imap: IntensityMap) -> None:
    """Row-major pixel dump with one image row per CSV record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["n", imap.grid.n])
        writer.writerow(["half_width", repr(imap.grid.half_width)])
        writer.writerow(["waist", repr(imap.grid.waist)])
        for row in imap.values:
            writer.writerow([repr(float(v)) for v in row])

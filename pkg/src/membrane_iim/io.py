"""Field snapshots, time series and run-directory writers.

Snapshot layout::

    FIELD <name> <centering> <nx> <ny> <h> <t>
    <row 0: values along y, space separated>
    ...

Rows follow the first array index (x).  The binary variant replaces the rows
with a line ``BINARY <sx> <sy>`` followed by ``sx*sy`` little-endian float64
values in row-major order.  ``nx``/``ny`` are the grid's cell counts; the
sample counts reveal periodicity (a closed axis carries one extra node or
face).  Axes whose sample count cannot tell (cells, and the tangential axis
of a face layout) are read back as periodic.  The origin is always (0, 0).
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .grid import CENTERINGS, Grid, GridError, ScalarField


class FieldFormatError(ValueError):
    pass


def _header(f: ScalarField) -> str:
    g = f.grid
    return f"FIELD {f.name} {f.centering} {g.nx} {g.ny} {g.h!r} {float(f.t)!r}\n"


def write_field(path, f: ScalarField, binary: bool = False):
    if any(c.isspace() for c in f.name) or not f.name:
        raise FieldFormatError(f"field name {f.name!r} must be a single token")
    a = np.ascontiguousarray(f.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_header(f).encode())
        if binary:
            fh.write(f"BINARY {a.shape[0]} {a.shape[1]}\n".encode())
            fh.write(a.tobytes(order="C"))
        else:
            for row in a:
                fh.write((" ".join(repr(float(v)) for v in row) + "\n").encode())


def _parse_header(line: str):
    tok = line.split()
    if len(tok) != 7 or tok[0] != "FIELD":
        raise FieldFormatError(f"bad header: {line.strip()!r}")
    name, centering = tok[1], tok[2]
    if centering not in CENTERINGS:
        raise FieldFormatError(f"unknown centering {centering!r}")
    try:
        nx, ny = int(tok[3]), int(tok[4])
        h, t = float(tok[5]), float(tok[6])
    except ValueError as exc:
        raise FieldFormatError(f"bad header numbers: {line.strip()!r}") from exc
    return name, centering, nx, ny, h, t


def _infer_grid(centering: str, nx: int, ny: int, h: float, shape) -> Grid:
    closed = {"node": (True, True), "cell": (False, False), "uface": (True, False), "vface": (False, True)}
    sx, sy = shape
    ex, ey = closed[centering]
    px = sx == nx
    py = sy == ny
    if not (px or (ex and sx == nx + 1)) or not (py or (ey and sy == ny + 1)):
        raise FieldFormatError(f"{centering} block of shape {shape} does not fit a {nx}x{ny} grid")
    try:
        return Grid((0.0, 0.0), (nx * h, ny * h), nx, ny, (px, py))
    except GridError as exc:
        raise FieldFormatError(f"header describes an invalid grid: {exc}") from exc


def read_field(path) -> ScalarField:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii", errors="replace")
        name, centering, nx, ny, h, t = _parse_header(head)
        pos = fh.tell()
        second = fh.readline()
        if second.startswith(b"BINARY"):
            try:
                _, sx, sy = second.split()
                sx, sy = int(sx), int(sy)
            except ValueError as exc:
                raise FieldFormatError(f"bad BINARY line: {second!r}") from exc
            raw = fh.read()
            if len(raw) != 8 * sx * sy:
                raise FieldFormatError(f"expected {8 * sx * sy} bytes of float64 data, found {len(raw)}")
            data = np.frombuffer(raw, dtype="<f8")
            a = data.reshape(sx, sy).astype(float)
        else:
            fh.seek(pos)
            try:
                rows = [ln.split() for ln in fh.read().decode("ascii").splitlines() if ln.strip()]
                if not rows or len({len(r) for r in rows}) != 1:
                    raise FieldFormatError("ragged or empty ASCII block")
                a = np.array(rows, dtype=float)
            except ValueError as exc:  # also covers UnicodeDecodeError
                if isinstance(exc, FieldFormatError):
                    raise
                raise FieldFormatError(f"unreadable ASCII block: {exc}") from exc
    grid = _infer_grid(centering, nx, ny, h, a.shape)
    return ScalarField(grid, a, centering, name, t)


def same_grid(a: Grid, b: Grid) -> bool:
    return a.nx == b.nx and a.ny == b.ny and a.periodic == b.periodic and np.isclose(a.h, b.h, rtol=1e-12)


# --------------------------------------------------------------------------
# time series

SERIES_COLUMNS = ("step", "t", "E_s", "E_b", "area", "perimeter", "kinetic", "max_u", "max_div", "dt")


def write_series_csv(path, rows):
    """``rows`` are SeriesRow dataclasses (or dicts with SERIES_COLUMNS)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for r in rows:
            d = asdict(r) if hasattr(r, "__dataclass_fields__") else r
            w.writerow([d["step"]] + [repr(float(d[c])) for c in SERIES_COLUMNS[1:]])


def read_series_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in (rows[0].keys() if rows else SERIES_COLUMNS)}


def write_report_csv(path_or_fh, records):
    """Verification report: ``check,measured,tolerance,pass`` per record."""
    own = isinstance(path_or_fh, (str, os.PathLike))
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("check", "measured", "tolerance", "pass"))
        for r in records:
            w.writerow((r.name, f"{r.measured:.6e}", f"{r.tolerance:.6e}", "pass" if r.passed else "fail"))
    finally:
        if own:
            fh.close()


class RunWriter:
    """Writes snapshots for one simulation into ``out``."""

    def __init__(self, out, binary: bool = False):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.binary = binary

    def field(self, f: ScalarField, step: int):
        write_field(self.out / f"field_{f.name}_{step:06d}", f, self.binary)

    def interface(self, pts: np.ndarray, step: int):
        from .levelset import write_polyline_csv

        write_polyline_csv(self.out / f"interface_{step:06d}.csv", pts)

    def jumps(self, js, step: int):
        from .jumps import write_jumpset_csv

        write_jumpset_csv(self.out / f"jumps_{step:06d}.csv", js)

    def series(self, rows):
        write_series_csv(self.out / "series.csv", rows)

    def config(self, cfg):
        (self.out / "config.txt").write_text(cfg.to_text())

"""Plain-text field snapshots (format ``NSCHSNAP v1``).

Layout::

    NSCHSNAP v1
    <dims> <nx> <ny> <lx> <ly>
    fields <name> <name> ...
    # optional comment lines (gauge note, params, time, pressure choice)
    <name>
    <nx*ny values, row-major, one grid row per line>
    <name>
    ...

Values are written with 17 significant digits, so a write/read round trip is
value-exact for float64.  The stored pressure is always in the mean-zero
gauge (gradient null modes removed); the header comment records that.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid

__all__ = ["write_snapshot", "read_snapshot"]

MAGIC = "NSCHSNAP v1"


def _fmt(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def write_snapshot(path, grid: Grid, fields: dict, meta: dict | None = None):
    """Write named scalar fields; ``meta`` values become header comments."""
    lines = [MAGIC, f"{grid.dims} {grid.nx} {grid.ny} {grid.lx:.17g} {grid.ly:.17g}"]
    lines.append("fields " + " ".join(fields))
    lines.append("# gauge: pressure stored mean-zero (gradient null modes removed)")
    for key, val in (meta or {}).items():
        lines.append(f"# {key}: {val}")
    for name, data in fields.items():
        data = grid.check_scalar(data)
        lines.append(name)
        rows = data.reshape(grid.ny, grid.nx) if grid.dims == 2 else data.reshape(1, grid.nx)
        for row in rows:
            lines.append(_fmt(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path):
    """Read a snapshot; returns ``(grid, fields, meta)``."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC} snapshot")
    parts = raw[1].split()
    if len(parts) != 5:
        raise ValueError(f"{path}: malformed geometry line {raw[1]!r}")
    dims, nx, ny = int(parts[0]), int(parts[1]), int(parts[2])
    lx, ly = float(parts[3]), float(parts[4])
    grid = Grid(nx=nx, lx=lx) if dims == 1 else Grid(nx=nx, lx=lx, ny=ny, ly=ly)
    tokens = raw[2].split()
    if tokens[:1] != ["fields"]:
        raise ValueError(f"{path}: missing fields line")
    names = tokens[1:]

    meta = {}
    i = 3
    while i < len(raw) and raw[i].startswith("#"):
        body = raw[i][1:].strip()
        if ":" in body:
            key, _, val = body.partition(":")
            meta[key.strip()] = val.strip()
        i += 1

    fields = {}
    nrows = grid.ny if dims == 2 else 1
    for name in names:
        if i >= len(raw) or raw[i].strip() != name:
            raise ValueError(f"{path}: expected field block {name!r} at line {i + 1}")
        i += 1
        rows = []
        for _ in range(nrows):
            rows.append(np.array(raw[i].split(), dtype=float))
            if rows[-1].size != nx:
                raise ValueError(f"{path}: field {name!r} row has {rows[-1].size} values, expected {nx}")
            i += 1
        data = np.vstack(rows)
        fields[name] = data.reshape(grid.shape)
    return grid, fields, meta


def state_fields(state, dims: int) -> dict:
    """Standard snapshot field set for a solver state."""
    out = {"phi": state.phi, "u_x": state.u[0]}
    if dims == 2:
        out["u_y"] = state.u[1]
    out["p"] = state.p
    out["mu"] = state.mu
    return out

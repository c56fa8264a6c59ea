"""Delimited and VTK output with lossless float formatting."""

import csv

import numpy as np

from .grid import StructuredGrid

FLOAT_FMT = "%.17g"


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def write_csv(path, header, rows):
    """RFC-4180-style CSV with a header row and 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _x_fastest(a, shape):
    """Reorder a (nx, ny, nz, ...) array so the x index varies fastest."""
    nx, ny, nz = shape
    a = np.asarray(a).reshape((nx, ny, nz) + np.asarray(a).shape[3:])
    return np.moveaxis(a, (0, 1, 2), (2, 1, 0)).reshape((nx * ny * nz,) + a.shape[3:])


def write_vtk_structured_points(path, grid: StructuredGrid, scalars=None,
                                vectors=None, tensors=None, title="rateform snapshot"):
    """Legacy-VTK ASCII STRUCTURED_POINTS with one dataset per field."""
    nx, ny, nz = grid.shape
    h = grid.spacing
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN " + " ".join(FLOAT_FMT % o for o in grid.origin),
        "SPACING " + " ".join(FLOAT_FMT % s for s in h),
        f"POINT_DATA {nx * ny * nz}",
    ]
    for name, data in (scalars or {}).items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        for v in _x_fastest(data, grid.shape):
            lines.append(FLOAT_FMT % v)
    for name, data in (vectors or {}).items():
        lines.append(f"VECTORS {name} double")
        for v in _x_fastest(data, grid.shape):
            lines.append(" ".join(FLOAT_FMT % c for c in v))
    for name, data in (tensors or {}).items():
        lines.append(f"TENSORS {name} double")
        for T in _x_fastest(data, grid.shape):
            for row in T:
                lines.append(" ".join(FLOAT_FMT % c for c in row))
            lines.append("")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_structured_points(path):
    """Round-trip reader for the writer above; returns (meta, fields) with
    fields back in (nx, ny, nz, ...) layout."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    meta = {}
    fields = {}
    i = 0

    def t(line):
        return line.split()

    while i < len(tokens):
        line = tokens[i]
        if line.startswith("DIMENSIONS"):
            meta["shape"] = tuple(int(x) for x in t(line)[1:4])
        elif line.startswith("ORIGIN"):
            meta["origin"] = tuple(float(x) for x in t(line)[1:4])
        elif line.startswith("SPACING"):
            meta["spacing"] = tuple(float(x) for x in t(line)[1:4])
        elif line.startswith("SCALARS"):
            name = t(line)[1]
            n = int(np.prod(meta["shape"]))
            vals = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            fields[name] = _from_x_fastest(vals, meta["shape"])
            i += 1 + n
        elif line.startswith("VECTORS"):
            name = t(line)[1]
            n = int(np.prod(meta["shape"]))
            vals = np.array([[float(c) for c in t(tokens[i + 1 + k])] for k in range(n)])
            fields[name] = _from_x_fastest(vals, meta["shape"])
            i += n
        elif line.startswith("TENSORS"):
            name = t(line)[1]
            n = int(np.prod(meta["shape"]))
            vals = np.empty((n, 3, 3))
            j = i + 1
            for k in range(n):
                for r in range(3):
                    vals[k, r] = [float(c) for c in t(tokens[j])]
                    j += 1
                j += 1  # blank separator
            fields[name] = _from_x_fastest(vals, meta["shape"])
            i = j - 1
        i += 1
    return meta, fields


def _from_x_fastest(flat, shape):
    nx, ny, nz = shape
    a = np.asarray(flat).reshape((nz, ny, nx) + np.asarray(flat).shape[1:])
    return np.moveaxis(a, (0, 1, 2), (2, 1, 0))

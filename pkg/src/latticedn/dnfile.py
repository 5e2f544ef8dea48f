"""Sampled edge D-N map files.

Layout: one JSON header line, then ``n_lambda`` rows ``[lam, L[0,0], L[0,1],
..., L[M-1,M-1]]`` (row-major).  ``csv`` writes the rows as text with 17
significant digits; ``binary`` writes them as little-endian float64 directly
after the header line.  Both round-trip exactly.
"""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .dn_maps import DELTA_T, DNOracle, distance_to_T0, sample_edge_maps
from .errors import SchemaError
from .lattice import SIDES, Region, build_region
from .vertex_system import KAPPA_MAX

__all__ = ["FORMAT", "VERSION", "DEFAULT_DENSITY", "sample_grid", "write_dn_file", "read_dn_file", "SampledOracle"]

FORMAT = "qgdn-dn"
VERSION = 1
DEFAULT_DENSITY = 20.0
INTERP_POINTS = 8


def sample_grid(lo: float, hi: float, density: float = DEFAULT_DENSITY, delta: float = DELTA_T):
    """Uniform grid on ``[lo, hi]`` with ``T0`` neighbourhoods removed.

    Returns ``(grid, n_dropped)``.
    """
    if not hi > lo:
        raise ValueError("empty sampling window")
    n = int(np.ceil((hi - lo) * density)) + 1
    grid = np.linspace(lo, hi, n)
    keep = distance_to_T0(grid) > delta
    return grid[keep], int(n - keep.sum())


def write_dn_file(
    path,
    region: Region,
    potentials: dict | None = None,
    *,
    lams=None,
    maps=None,
    window=(0.3, 200.0),
    density: float = DEFAULT_DENSITY,
    encoding: str = "csv",
    chunk: int = 128,
    workers: int = 1,
) -> dict:
    """Sample the edge D-N map and write it; returns the header.

    Either ``potentials`` (maps are computed on a T0-avoiding grid, dropping
    lambdas where the edge problem is singular) or explicit ``lams``/``maps``.
    """
    if encoding not in ("csv", "binary"):
        raise SchemaError(f"unknown encoding {encoding!r}")
    dropped = {}
    if maps is None:
        if potentials is None:
            raise ValueError("need potentials or explicit maps")
        if lams is None:
            lams, dropped["T0"] = sample_grid(window[0], window[1], density)
        lams = np.asarray(lams, dtype=np.float64)
        maps, cond = sample_edge_maps(region, potentials, lams, chunk, workers)
        ok = cond < KAPPA_MAX
        dropped["singular"] = int((~ok).sum())
        lams, maps = lams[ok], maps[ok]
    lams = np.asarray(lams, dtype=np.float64)
    maps = np.asarray(maps, dtype=np.float64)
    M = region.M
    if maps.shape != (lams.size, M, M):
        raise SchemaError(f"maps have shape {maps.shape}, expected ({lams.size}, {M}, {M})")
    header = {
        "format": FORMAT,
        "version": VERSION,
        "N": region.N,
        "M": M,
        "encoding": encoding,
        "n_lambda": int(lams.size),
        "boundary_order": list(SIDES),
        "window": [float(window[0]), float(window[1])] if lams.size == 0 else [float(lams.min()), float(lams.max())],
        "density": float(density),
        "dropped": dropped,
    }
    rows = np.column_stack([lams, maps.reshape(lams.size, M * M)])
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        if encoding == "csv":
            buf = io.StringIO()
            np.savetxt(buf, rows, fmt="%.17g", delimiter=",")
            fh.write(buf.getvalue().encode())
        else:
            fh.write(rows.astype("<f8").tobytes())
    return header


def _check_header(header: dict) -> None:
    if header.get("format") != FORMAT:
        raise SchemaError(f"not a {FORMAT} file")
    if header.get("version") != VERSION:
        raise SchemaError(f"unsupported version {header.get('version')!r}")
    for key in ("N", "M", "encoding", "n_lambda"):
        if key not in header:
            raise SchemaError(f"header lacks {key!r}")
    if header["M"] != 4 * (header["N"] + 1):
        raise SchemaError("header M is inconsistent with N")
    if header.get("boundary_order", list(SIDES)) != list(SIDES):
        raise SchemaError(f"boundary order must be {list(SIDES)}")


def read_dn_file(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Return ``(header, lams, maps)``; raises :class:`SchemaError` on any defect."""
    with open(path, "rb") as fh:
        first = fh.readline()
        try:
            header = json.loads(first.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"bad header line: {exc}") from None
        if not isinstance(header, dict):
            raise SchemaError("header is not a JSON object")
        _check_header(header)
        payload = fh.read()
    M, n = header["M"], header["n_lambda"]
    width = 1 + M * M
    if header["encoding"] == "binary":
        if len(payload) != 8 * n * width:
            raise SchemaError(f"binary payload has {len(payload)} bytes, expected {8 * n * width}")
        rows = np.frombuffer(payload, dtype="<f8").reshape(n, width).astype(np.float64)
    elif header["encoding"] == "csv":
        lines = [ln for ln in payload.decode().splitlines() if ln.strip()]
        if len(lines) != n:
            raise SchemaError(f"{len(lines)} data rows, header declares {n}")
        try:
            rows = np.array([[float(x) for x in ln.split(",")] for ln in lines], dtype=np.float64)
        except ValueError as exc:
            raise SchemaError(f"non-numeric entry: {exc}") from None
        if n and rows.shape != (n, width):
            raise SchemaError(f"rows have {rows.shape[1] if rows.ndim == 2 else '?'} fields, expected {width}")
        rows = rows.reshape(n, width)
    else:
        raise SchemaError(f"unknown encoding {header['encoding']!r}")
    if not np.all(np.isfinite(rows)):
        raise SchemaError("non-finite entries in payload")
    lams = rows[:, 0].copy()
    if np.any(np.diff(lams) <= 0):
        raise SchemaError("lambda column must be strictly increasing")
    return header, lams, rows[:, 1:].reshape(n, M, M).copy()


class SampledOracle(DNOracle):
    """Edge D-N map known only at stored nodes.

    Off-node queries use barycentric interpolation through the nearest
    stored nodes on the same gap-free run of the grid; they are far less
    accurate than node values near poles of the map.
    """

    exact = False

    def __init__(self, region: Region, lams, maps, header: dict | None = None):
        self.region = region
        self.lams = np.asarray(lams, dtype=np.float64)
        self.maps = np.asarray(maps, dtype=np.float64)
        self.header = header or {}
        self.calls = 0
        if self.lams.size > 1:
            gaps = np.diff(self.lams)
            breaks = np.nonzero(gaps > 3.0 * np.median(gaps))[0] + 1
        else:
            breaks = np.array([], dtype=int)
        self._runs = np.searchsorted(np.r_[0, breaks], np.arange(self.lams.size), side="right") - 1

    @classmethod
    def from_file(cls, path) -> "SampledOracle":
        header, lams, maps = read_dn_file(path)
        return cls(build_region(header["N"]), lams, maps, header)

    def nodes(self, lo: float, hi: float) -> np.ndarray:
        return self.lams[(self.lams >= lo) & (self.lams <= hi)]

    def _one(self, lam: float) -> np.ndarray:
        j = int(np.clip(np.searchsorted(self.lams, lam), 0, self.lams.size - 1))
        if j > 0 and abs(self.lams[j - 1] - lam) < abs(self.lams[j] - lam):
            j -= 1
        if abs(self.lams[j] - lam) <= 1e-13 * max(1.0, abs(lam)):
            return self.maps[j]
        idx = np.nonzero(self._runs == self._runs[j])[0]
        near = idx[np.argsort(np.abs(self.lams[idx] - lam), kind="stable")[:INTERP_POINTS]]
        x = self.lams[near]
        w = np.array([1.0 / np.prod(x[i] - np.delete(x, i)) for i in range(x.size)])
        t = w / (lam - x)
        return np.tensordot(t, self.maps[near], axes=1) / t.sum()

    def many(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
        self.calls += lams.size
        if self.lams.size == 0:
            raise SchemaError("sampled oracle holds no nodes")
        return np.array([self._one(x) for x in lams]).reshape(lams.size, self.region.M, self.region.M)

"""Command-line front end.

Subcommands::

    latticedn forward     --config C --out dn.csv      sample the edge D-N map to a file
    latticedn reconstruct DNFILE [--config C] --out report.json
    latticedn roundtrip   --config C --out report.json forward (in process) + reconstruct + compare
    latticedn spectrum    --config C [--edge E] --out spectrum.csv

Exit codes: 0 success, 2 tolerance failure, 3 schema or input error, 4
numerical failure.  ``LATTICEDN_CONFIG``, ``LATTICEDN_OUT``,
``LATTICEDN_WORKERS`` and ``LATTICEDN_SEED`` supply defaults for the flags.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .dn_maps import CallableOracle
from .dnfile import DEFAULT_DENSITY, SampledOracle, write_dn_file
from .edge_ode import SymmetricPotential, dirichlet_eigenvalues, shoot_many
from .errors import NumericalError, SchemaError
from .lattice import Region, build_region, parse_edge
from .reconstruct import ReconOptions, reconstruct

__all__ = ["ExperimentConfig", "load_config", "main", "EXIT_OK", "EXIT_TOLERANCE", "EXIT_SCHEMA", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_SCHEMA = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("latticedn")

_KNOWN_KEYS = {
    "N", "potentials", "default_potential", "random", "window", "density", "lams", "encoding",
    "basis_dim", "oracle", "dn_file", "tolerance", "recon", "edge", "count", "weyl_lams", "potential",
}  # fmt: skip


@dataclass
class ExperimentConfig:
    """Parsed experiment configuration.

    ``potentials`` maps interior edges to potentials; edges not listed carry
    ``default_potential`` (zero unless given).  ``tolerance`` holds
    ``rel_l2`` (per edge, relative to ``max(||q||, 1)``) and optionally
    ``coef`` (max absolute coefficient error).
    """

    N: int
    potentials: dict = field(default_factory=dict)
    window: tuple | None = None
    density: float = DEFAULT_DENSITY
    lams: list | None = None
    encoding: str = "csv"
    basis_dim: int = 2
    oracle: str = "callable"
    dn_file: str | None = None
    tolerance: dict = field(default_factory=lambda: {"rel_l2": 1e-3})
    recon: dict = field(default_factory=dict)
    edge: str | None = None
    count: int = 6
    weyl_lams: list | None = None
    potential: SymmetricPotential | None = None

    def region(self) -> Region:
        return build_region(self.N)

    def recon_options(self) -> ReconOptions:
        names = {f.name for f in fields(ReconOptions)}
        bad = set(self.recon) - names
        if bad:
            raise SchemaError(f"unknown reconstruction options {sorted(bad)}")
        opts = dict(self.recon)
        opts.setdefault("basis_dim", self.basis_dim)
        return ReconOptions(**opts)

    def sampling_window(self) -> tuple:
        if self.window is not None:
            return tuple(self.window)
        return self.recon_options().window()


def _potential(spec, where: str) -> SymmetricPotential:
    if isinstance(spec, (int, float)):
        return SymmetricPotential.constant(float(spec))
    if isinstance(spec, list) and spec and all(isinstance(x, (int, float)) for x in spec):
        return SymmetricPotential.from_coefficients(spec)
    if isinstance(spec, dict) and "c0" in spec:
        return SymmetricPotential(spec["c0"], tuple(spec.get("c", ())))
    raise SchemaError(f"{where}: a potential is a number, a coefficient list or {{'c0':..,'c':[..]}}")


def load_config(source, seed: int | None = None) -> ExperimentConfig:
    """Validate a config dict (or JSON file path) into an :class:`ExperimentConfig`."""
    if not isinstance(source, dict):
        try:
            with open(source) as fh:
                source = json.load(fh)
        except OSError as exc:
            raise SchemaError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from None
    if not isinstance(source, dict):
        raise SchemaError("config must be a JSON object")
    unknown = set(source) - _KNOWN_KEYS
    if unknown:
        raise SchemaError(f"unknown config keys {sorted(unknown)}")
    N = source.get("N")
    if not isinstance(N, int) or N < 0:
        raise SchemaError("N must be a non-negative integer")
    region = build_region(N)
    pots: dict = {}
    default = source.get("default_potential")
    if default is not None:
        q = _potential(default, "default_potential")
        pots = {e: q for e in region.interior_edges}
    rnd = source.get("random")
    if rnd is not None:
        rng = np.random.default_rng(seed if seed is not None else rnd.get("seed", 0))
        lo, hi = rnd.get("low", -2.0), rnd.get("high", 2.0)
        modes = int(rnd.get("modes", 0))
        for e in region.interior_edges:
            pots[e] = SymmetricPotential.from_coefficients(rng.uniform(lo, hi, modes + 1))
    for key, spec in (source.get("potentials") or {}).items():
        try:
            e = parse_edge(key)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        if e not in region.edges:
            raise SchemaError(f"edge {key} is not an edge of the region N={N}")
        if not region.is_interior_edge(e):
            raise SchemaError(f"edge {key} touches the boundary; only interior edges carry potentials")
        pots[e] = _potential(spec, f"potentials[{key}]")
    cfg = ExperimentConfig(N=N, potentials=pots)
    for key in ("density", "encoding", "basis_dim", "oracle", "dn_file", "edge", "count"):
        if key in source:
            setattr(cfg, key, source[key])
    if "window" in source:
        w = source["window"]
        if not (isinstance(w, list) and len(w) == 2 and w[0] < w[1]):
            raise SchemaError("window must be [lo, hi] with lo < hi")
        cfg.window = (float(w[0]), float(w[1]))
    if "lams" in source:
        cfg.lams = [float(x) for x in source["lams"]]
    if "weyl_lams" in source:
        cfg.weyl_lams = [float(x) for x in source["weyl_lams"]]
    if "tolerance" in source:
        cfg.tolerance = {**cfg.tolerance, **source["tolerance"]}
    if "recon" in source:
        cfg.recon = dict(source["recon"])
    if "potential" in source:
        cfg.potential = _potential(source["potential"], "potential")
    if cfg.encoding not in ("csv", "binary"):
        raise SchemaError("encoding must be 'csv' or 'binary'")
    if cfg.oracle not in ("callable", "file"):
        raise SchemaError("oracle must be 'callable' or 'file'")
    if not isinstance(cfg.basis_dim, int) or cfg.basis_dim < 0:
        raise SchemaError("basis_dim must be a non-negative integer")
    cfg.recon_options()  # validates overrides early
    return cfg


def compare(planted: dict, recovered: dict, region: Region, tolerance: dict) -> tuple[list, bool]:
    """Per-edge comparison rows and the overall pass flag."""
    rows, ok = [], True
    zero = SymmetricPotential.zero()
    rel_tol = tolerance.get("rel_l2")
    coef_tol = tolerance.get("coef")
    for e in region.interior_edges:
        q, r = planted.get(e, zero), recovered[e]
        n = max(q.basis_dim, r.basis_dim)
        rel = q.l2_distance(r) / max(q.l2_norm(), 1.0)
        coef = float(np.max(np.abs(q.padded(n) - r.padded(n))))
        passed = (rel_tol is None or rel <= rel_tol) and (coef_tol is None or coef <= coef_tol)
        ok &= passed
        rows.append(
            {
                "edge": str(e),
                "planted": q.padded(n).tolist(),
                "recovered": r.padded(n).tolist(),
                "rel_l2": rel,
                "coef_err": coef,
                "pass": bool(passed),
            }
        )
    return rows, ok


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_forward(cfg: ExperimentConfig, out: str, workers: int = 1) -> int:
    if out in (None, "-"):
        raise SchemaError("forward needs --out")
    region = cfg.region()
    header = write_dn_file(
        out,
        region,
        cfg.potentials,
        lams=cfg.lams,
        window=cfg.sampling_window(),
        density=cfg.density,
        encoding=cfg.encoding,
        workers=workers,
    )
    for reason, count in header["dropped"].items():
        if count:
            log.info("dropped %d lambda values (%s)", count, reason)
    log.info("wrote %d maps to %s", header["n_lambda"], out)
    return EXIT_OK


def _report(cfg, region, result, planted=None):
    rep = result.to_json()
    rep["N"] = region.N
    ok = True
    if planted is not None:
        rows, ok = compare(planted, result.potentials, region, cfg.tolerance)
        rep["comparison"] = rows
        rep["tolerance"] = cfg.tolerance
        rep["pass"] = bool(ok)
    return rep, ok


def cmd_reconstruct(dn_file: str, cfg: ExperimentConfig | None, out: str | None) -> int:
    oracle = SampledOracle.from_file(dn_file)
    region = oracle.region
    if cfg is not None and cfg.N != region.N:
        raise SchemaError(f"config N={cfg.N} but file N={region.N}")
    opts = cfg.recon_options() if cfg is not None else ReconOptions()
    result = reconstruct(region, oracle, opts)
    # with a config the file is compared against its planted potentials (absent edges are zero)
    rep, ok = _report(cfg, region, result, cfg.potentials if cfg is not None else None)
    rep["source"] = {"mode": "file", "n_lambda": int(oracle.lams.size), "dropped": oracle.header.get("dropped", {})}
    _write_json(rep, out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_roundtrip(cfg: ExperimentConfig, out: str | None, workers: int = 1) -> int:
    region = cfg.region()
    if cfg.oracle == "file":
        if not cfg.dn_file:
            raise SchemaError("oracle 'file' needs dn_file")
        write_dn_file(
            cfg.dn_file, region, cfg.potentials, window=cfg.sampling_window(), density=cfg.density,
            encoding=cfg.encoding, workers=workers,
        )  # fmt: skip
        oracle = SampledOracle.from_file(cfg.dn_file)
    else:
        oracle = CallableOracle(region, cfg.potentials, workers=workers)
    result = reconstruct(region, oracle, cfg.recon_options())
    rep, ok = _report(cfg, region, result, cfg.potentials)
    rep["source"] = {"mode": cfg.oracle}
    _write_json(rep, out)
    log.info("roundtrip %s", "passed" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_spectrum(cfg: ExperimentConfig, edge: str | None, out: str | None) -> int:
    edge = edge or cfg.edge
    if edge is not None:
        e = parse_edge(edge)
        if e not in cfg.region().edges:
            raise SchemaError(f"edge {edge} is not in the region")
        q = cfg.potentials.get(e, SymmetricPotential.zero())
    elif cfg.potential is not None:
        q = cfg.potential
    else:
        raise SchemaError("spectrum needs an edge (--edge or config 'edge') or a 'potential'")
    eigs = dirichlet_eigenvalues(q, int(cfg.count))
    rows = [("eigenvalue", n, repr(float(x)), "") for n, x in enumerate(eigs, start=1)]
    if cfg.weyl_lams:
        data = shoot_many(q, cfg.weyl_lams)
        for lam, (S1, dS1, _, _) in zip(cfg.weyl_lams, data):
            rows.append(("weyl", "", repr(float(lam)), format(dS1 / S1, ".17g")))
    fh = sys.stdout if out in (None, "-") else open(out, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(["kind", "n", "lambda", "value"])
        for kind, n, lam, val in rows:
            w.writerow([kind, n, format(float(lam), ".17g"), val])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=os.environ.get("LATTICEDN_CONFIG"), help="JSON experiment config")
    common.add_argument("--out", default=os.environ.get("LATTICEDN_OUT"), help="output path ('-' for stdout)")
    common.add_argument(
        "--workers", type=int, default=int(os.environ.get("LATTICEDN_WORKERS", os.cpu_count() or 1)),
        help="thread pool size for forward sampling",
    )  # fmt: skip
    common.add_argument(
        "--seed", type=int, default=None if "LATTICEDN_SEED" not in os.environ else int(os.environ["LATTICEDN_SEED"]),
        help="seed for randomly generated test potentials",
    )  # fmt: skip
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="latticedn", description="Edge/vertex D-N maps on square lattices.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common], help="sample the edge D-N map to a file")
    r = sub.add_parser("reconstruct", parents=[common], help="recover edge potentials from a D-N file")
    r.add_argument("dn_file")
    sub.add_parser("roundtrip", parents=[common], help="forward + reconstruct + compare")
    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues and Weyl samples of one edge")
    s.add_argument("--edge", default=None)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed) if args.config else None
        if args.command == "reconstruct":
            return cmd_reconstruct(args.dn_file, cfg, args.out)
        if cfg is None:
            raise SchemaError(f"{args.command} needs --config")
        if args.command == "forward":
            return cmd_forward(cfg, args.out, max(1, args.workers))
        if args.command == "roundtrip":
            return cmd_roundtrip(cfg, args.out, max(1, args.workers))
        return cmd_spectrum(cfg, args.edge, args.out)
    except (SchemaError, OSError) as exc:
        print(f"latticedn: input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalError as exc:
        print(f"latticedn: numerical failure: {exc}", file=sys.stderr)
        state = getattr(exc, "state", None)
        if state is not None:
            print(json.dumps(state.to_json(), indent=2), file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"latticedn: input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


def main(argv=None) -> None:
    sys.exit(run(argv))

"""Command-line front end: configure scenarios, run experiments, emit CSV.

Subcommands: bounds, deform, flow, epsilon, count, covariance.  Outputs are
deterministic: identical configs produce byte-identical files once the
timestamp header is suppressed with --no-timestamp.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.

Thread control (--threads or the GABOR_THREADS environment variable) is
applied to the BLAS pools before any numerical module is imported, which is
why the heavy imports live inside the command functions.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header, rows, timestamp: bool) -> None:
    lines = []
    if timestamp:
        lines.append(f"# generated {datetime.datetime.now().isoformat()}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _load_config(args):
    from .config import ScenarioConfig

    cfg = (
        ScenarioConfig.from_json_file(args.config)
        if args.config
        else ScenarioConfig.default()
    )
    cfg.apply_overrides(args.override or [])
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_bounds(args) -> int:
    from .frame import GaborSystem, frame_bounds

    cfg = _load_config(args)
    g = cfg.build_grid()
    sys_ = GaborSystem(cfg.build_window(g), cfg.build_lattice(), g)
    fb = frame_bounds(sys_)
    rows = [(fb.A, fb.B, fb.is_frame, len(sys_.points), g.N)]
    _write_csv(_outdir(args) / "bounds.csv", ("A", "B", "is_frame", "num_points", "N"),
               rows, not args.no_timestamp)
    print(f"A={_fmt(fb.A)} B={_fmt(fb.B)} is_frame={_fmt(fb.is_frame)}")
    return EXIT_OK


def cmd_deform(args) -> int:
    from .frame import REPORT_COLUMNS, GaborSystem, ellipsoid_deform

    cfg = _load_config(args)
    g = cfg.build_grid()
    sys_ = GaborSystem(cfg.build_window(g), cfg.build_lattice(), g)
    rows = []
    for E in cfg.energy_sweep():
        ell = cfg.build_ellipsoid(E)
        for t in cfg.t_values():
            _, report = ellipsoid_deform(sys_, ell, t, cfg.tolerances.boundary_tol)
            rows.append(report.csv_row())
    _write_csv(_outdir(args) / "deform.csv", REPORT_COLUMNS, rows, not args.no_timestamp)
    print(f"wrote {len(rows)} deformation rows")
    return EXIT_OK


def cmd_flow(args) -> int:
    import datetime as _dt

    from .flow import BumpSpec, TruncatedHamiltonian, flow_trajectory, write_trajectory_csv

    cfg = _load_config(args)
    ell = cfg.build_ellipsoid()
    th = TruncatedHamiltonian(BumpSpec(ell, float(cfg.flow.eps)))
    times, pts, hvals = flow_trajectory(
        [float(v) for v in cfg.flow.z0], th, float(cfg.flow.t), float(cfg.flow.dt_max)
    )
    stamp = None if args.no_timestamp else f"# generated {_dt.datetime.now().isoformat()}"
    out = _outdir(args) / "flow.csv"
    write_trajectory_csv(out, times, pts, hvals, stamp)
    print(f"wrote {times.size} trajectory rows to {out}")
    return EXIT_OK


def cmd_epsilon(args) -> int:
    from .lattice import max_safe_epsilon

    cfg = _load_config(args)
    ell = cfg.build_ellipsoid()
    eps = max_safe_epsilon(
        cfg.build_lattice(), ell, cfg.tolerances.boundary_tol, cfg.tolerances.eps_max
    )
    print(_fmt(eps))
    if args.out:
        _write_csv(_outdir(args) / "epsilon.csv", ("E", "eps_star"),
                   [(ell.E, eps)], not args.no_timestamp)
    return EXIT_OK


def cmd_count(args) -> int:
    from .lattice import count_in_ellipsoid

    cfg = _load_config(args)
    P = cfg.build_lattice()
    rows = []
    for E in cfg.energy_sweep():
        ell = cfg.build_ellipsoid(E)
        rows.append((E, count_in_ellipsoid(P, ell)))
    _write_csv(_outdir(args) / "count.csv", ("E", "count"), rows, not args.no_timestamp)
    for E, c in rows:
        print(f"E={_fmt(E)} count={c}")
    return EXIT_OK


def cmd_covariance(args) -> int:
    import numpy as np

    from .metaplectic import covariance_defect

    cfg = _load_config(args)
    M = np.asarray(cfg.ellipsoid.M, dtype=float)
    grids = cfg.covariance.grids or [cfg.grid.N]
    grids = [int(n) for n in grids]
    header = ["t", "q", "p"] + [f"defect_N{n}" for n in grids]
    if len(grids) == 2:
        header.append("ratio")
    rows = []
    for case in cfg.covariance.cases:
        t, q, p = (float(v) for v in case)
        defects = [covariance_defect(M, t, [q, p], cfg.build_grid(n)) for n in grids]
        row = [t, q, p] + defects
        if len(grids) == 2:
            row.append(defects[1] / max(defects[0], 1e-300))
        rows.append(tuple(row))
    _write_csv(_outdir(args) / "covariance.csv", header, rows, not args.no_timestamp)
    print(f"wrote {len(rows)} covariance rows")
    return EXIT_OK


_COMMANDS = {
    "bounds": cmd_bounds,
    "deform": cmd_deform,
    "flow": cmd_flow,
    "epsilon": cmd_epsilon,
    "count": cmd_count,
    "covariance": cmd_covariance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaborflow",
        description="Phase-space deformation experiments for Gabor frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON scenario config (defaults built in)")
        p.add_argument("--out", help="output directory (default: cwd)")
        p.add_argument("--no-timestamp", action="store_true",
                       help="suppress the timestamp header line (reproducible output)")
        p.add_argument("--threads", type=int, default=None,
                       help="BLAS thread count (env GABOR_THREADS as fallback)")
        p.add_argument("--override", action="append", metavar="SECTION.KEY=JSON",
                       help="override a config value, e.g. grid.N=512")
        p.set_defaults(fn=fn)
    return parser


def _configure_threads(requested: int | None) -> None:
    threads = requested
    if threads is None:
        env = os.environ.get("GABOR_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise SystemExit(f"GABOR_THREADS must be an integer, got {env!r}")
    if threads is not None:
        if threads < 1:
            raise SystemExit("thread count must be >= 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_threads(args.threads)

    from .config import ConfigError

    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / IO failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

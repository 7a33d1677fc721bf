"""Command-line entry point.

Subcommands:
    run <config>    execute a simulation, writing energy.csv, the
                    effective configuration, and field snapshots
    check <config>  validate a configuration and echo the effective form
    diag <dir>      recompute the final diagnostics row from the stored
                    snapshots of a finished run

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 I/O error.
"""

import argparse
import os
import sys

from . import dynamics, maxwell, snapshots
from .config import RunConfig, build_setup, parse_config
from .diagnostics import (CSV_COLUMNS, omega_limit_field_cells,
                          saturation_deviation, stationarity_report)
from .energetics import total_energy
from .errors import ConfigError, SimulationError

DIAG_COLUMNS = ("t", "exchange", "anisotropy", "maxwell_h", "maxwell_e",
                "surf_anis", "superexch_q", "superexch_biq", "penalty",
                "total", "saturation_dev", "divergence_drift")


def _fmt_row(values) -> str:
    return ",".join(format(v, ".17g") for v in values)


def _atomic_write_text(path: str, text: str):
    tmp = path + ".partial"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fail(code: int, kind: str, message: str) -> int:
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _load_config(path: str, args) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    config = parse_config(text)
    if args.log_every is not None:
        config.cadence = args.log_every
    if args.snapshots is not None:
        config.snapshots_on = args.snapshots == "on"
    if args.seed is not None:
        config.seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    elif os.environ.get("SPINLAYER_THREADS"):
        config.threads = int(os.environ["SPINLAYER_THREADS"])
    return config


def _write_state_snapshots(outdir: str, tag: str, state_m, em, geom, t: float):
    dims = (geom.nx, geom.ny, geom.nz_total)
    sp = (geom.dx, geom.dy, geom.dz)
    box = em.box
    bdims = (box.nx, box.ny, box.nz)
    snapshots.write_snapshot(os.path.join(outdir, f"{tag}_m.snap"),
                             snapshots.FIELD_M, dims, sp, t, [state_m])
    snapshots.write_snapshot(os.path.join(outdir, f"{tag}_h.snap"),
                             snapshots.FIELD_H, bdims, sp, t, [em.hx, em.hy, em.hz])
    snapshots.write_snapshot(os.path.join(outdir, f"{tag}_e.snap"),
                             snapshots.FIELD_E, bdims, sp, t, [em.ex, em.ey, em.ez])


def _cmd_check(args) -> int:
    try:
        config = _load_config(args.config, args)
        build_setup(config)
    except OSError as exc:
        return _fail(4, "io", str(exc))
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except SimulationError as exc:
        return _fail(3, "numeric", str(exc))
    sys.stdout.write(config.to_text())
    return 0


def _cmd_run(args) -> int:
    try:
        config = _load_config(args.config, args)
        setup = build_setup(config)
    except OSError as exc:
        return _fail(4, "io", str(exc))
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except SimulationError as exc:
        return _fail(3, "numeric", str(exc))

    outdir = config.directory
    lock = os.path.join(outdir, "lock")
    try:
        os.makedirs(outdir, exist_ok=True)
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        os.close(fd)
    except OSError as exc:
        return _fail(4, "io", f"cannot lock output directory: {exc}")

    csv_tmp = os.path.join(outdir, "energy.csv.partial")
    code = 0
    try:
        _atomic_write_text(os.path.join(outdir, "effective_config"), config.to_text())
        _write_state_snapshots(outdir, "state_initial", setup.m0, setup.em,
                               setup.geom, 0.0)
        csv_fh = open(csv_tmp, "w")
        csv_fh.write(",".join(CSV_COLUMNS) + "\n")

        def on_row(row):
            csv_fh.write(_fmt_row(row.csv_values()) + "\n")

        def on_state(state, step_idx):
            if config.snapshots_on and step_idx > 0:
                path = os.path.join(outdir, f"m_{step_idx:08d}.snap")
                snapshots.write_snapshot(
                    path, snapshots.FIELD_M,
                    (setup.geom.nx, setup.geom.ny, setup.geom.nz_total),
                    (setup.geom.dx, setup.geom.dy, setup.geom.dz),
                    state.t, [state.m])

        try:
            traj = dynamics.run(setup.geom, setup.params, setup.scheme, setup.m0,
                                setup.em, setup.f, config.t_end,
                                log_every=config.cadence,
                                on_row=on_row, on_state=on_state)
        except SimulationError as exc:
            csv_fh.close()
            return _fail(3, "numeric", str(exc))
        csv_fh.close()
        os.replace(csv_tmp, os.path.join(outdir, "energy.csv"))
        final = traj.final_state
        _write_state_snapshots(outdir, "state_final", final.m, final.em,
                               setup.geom, final.t)
    except OSError as exc:
        code = _fail(4, "io", str(exc))
    finally:
        try:
            os.remove(lock)
        except OSError:
            pass
    return code


def recompute_final_row(outdir: str):
    """Diagnostics of the stored final state; values match the final
    energy.csv row bit for bit because the same routines produce both.

    Returns (row dict, stationarity report rows)."""
    with open(os.path.join(outdir, "effective_config")) as fh:
        config = parse_config(fh.read())
    setup = build_setup(config)
    geom = setup.geom

    _, _, _, _, (m0_arr,) = snapshots.read_snapshot(
        os.path.join(outdir, "state_initial_m.snap"))
    _, _, _, _, h0_arrays = snapshots.read_snapshot(
        os.path.join(outdir, "state_initial_h.snap"))
    _, _, _, t_final, (m_arr,) = snapshots.read_snapshot(
        os.path.join(outdir, "state_final_m.snap"))
    _, _, _, _, h_arrays = snapshots.read_snapshot(
        os.path.join(outdir, "state_final_h.snap"))
    _, _, _, _, e_arrays = snapshots.read_snapshot(
        os.path.join(outdir, "state_final_e.snap"))

    em = maxwell.empty_em_state(setup.box, bc=config.bc)
    em.hx, em.hy, em.hz = h0_arrays
    maxwell.record_div0(em, m0_arr, geom)
    em.hx, em.hy, em.hz = h_arrays
    em.ex, em.ey, em.ez = e_arrays

    breakdown = total_energy(m_arr, em, geom, setup.params,
                             bc_mode=config.bc_mode, constraint=config.constraint)
    drift = maxwell.divergence_drift(em, m_arr, geom)
    values = ((t_final,) + breakdown.as_tuple()
              + (saturation_deviation(m_arr), drift))

    H = omega_limit_field_cells(m_arr, setup.box, geom)
    stationarity = stationarity_report(m_arr, H, setup.params, geom)
    return dict(zip(DIAG_COLUMNS, values)), stationarity


def _cmd_diag(args) -> int:
    try:
        row, stationarity = recompute_final_row(args.directory)
    except OSError as exc:
        return _fail(4, "io", str(exc))
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except SimulationError as exc:
        return _fail(3, "numeric", str(exc))
    text = ",".join(DIAG_COLUMNS) + "\n" + _fmt_row(row.values()) + "\n"
    stat_text = "test_fn,residual\n" + "".join(
        f"{name},{format(value, '.17g')}\n" for name, value in stationarity)
    try:
        _atomic_write_text(os.path.join(args.directory, "diag_report.csv"), text)
        _atomic_write_text(os.path.join(args.directory, "stationarity.csv"),
                           stat_text)
    except OSError as exc:
        return _fail(4, "io", str(exc))
    sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinlayer",
        description="coupled magnetization/Maxwell simulator for a "
                    "bilayer ferromagnet with a spacer")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (0 = auto); recorded in the "
                             "effective config")
    parser.add_argument("--log-every", type=int, default=None,
                        help="ledger row cadence in steps")
    parser.add_argument("--snapshots", choices=("on", "off"), default=None)
    parser.add_argument("--seed", type=int, default=None,
                        help="override the random-preset seed")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a simulation")
    p_run.add_argument("config")
    p_check = sub.add_parser("check", help="validate a configuration")
    p_check.add_argument("config")
    p_diag = sub.add_parser("diag", help="recompute diagnostics offline")
    p_diag.add_argument("directory")
    args = parser.parse_args(argv)

    if args.command == "run":
        return _cmd_run(args)
    if args.command == "check":
        return _cmd_check(args)
    return _cmd_diag(args)


if __name__ == "__main__":
    sys.exit(main())

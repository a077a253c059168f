"""Command-line interface: config-driven subcommands emitting CSV/JSON data.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 degenerate or
no-crossing result.  All floats print with 9 significant digits; CSV uses a
comma delimiter and '.' decimal separator regardless of locale.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .lindblad import (
    DriveParams,
    LambdaParams,
    StepSizeError,
    SteadyStateError,
)
from .modelfit import NoCrossingError, aic_crossover
from .pulses import (
    PulseRecord,
    PulseSpec,
    StorageSchedule,
    propagate_pulse,
    reference_pulse,
    run_storage,
)
from .scattering import (
    PowerCalibration,
    eit_spectrum,
    eit_threshold,
    group_delay,
    spectrum_arrays,
)
from .spectrum import (
    EigensolverError,
    FluxoniumParams,
    TruncationError,
    compute_spectrum,
    flux_sweep,
)

SUBCOMMANDS = (
    "spectrum", "flux-sweep", "transmission-map", "delay",
    "threshold", "pulse", "store", "aic", "figures",
)


@dataclass(frozen=True)
class ResultManifest:
    subcommand: str
    config_hash: str
    artifacts: list[str]
    duration_s: float


def fmt(x) -> str:
    """9-significant-digit formatting for all numeric output."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def write_table(path: Path, header: list[str], rows, fmt_kind: str = "csv") -> Path:
    if fmt_kind == "json":
        path = path.with_suffix(".json")
        payload = [
            {k: (v if isinstance(v, str) else float(fmt(v))) for k, v in zip(header, row)}
            for row in rows
        ]
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return path
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def _spectrum_row(flux: float, params: FluxoniumParams) -> list:
    res = compute_spectrum(params, n_levels=3, check_convergence=False)
    return [
        flux, res.nu(0, 1), res.nu(1, 2), res.nu(0, 2),
        res.n_elem(0, 1), res.n_elem(1, 2), res.n_elem(0, 2),
    ]


SPECTRUM_HEADER = ["flux", "nu01_ghz", "nu12_ghz", "nu02_ghz", "n01", "n12", "n02"]


def cmd_spectrum(cfg: RunConfig, outdir: Path) -> list[Path]:
    res = compute_spectrum(cfg.fluxonium, n_levels=3, check_convergence=True)
    row = [
        cfg.fluxonium.flux, res.nu(0, 1), res.nu(1, 2), res.nu(0, 2),
        res.n_elem(0, 1), res.n_elem(1, 2), res.n_elem(0, 2),
    ]
    return [write_table(outdir / "spectrum.csv", SPECTRUM_HEADER, [row], cfg.output_format)]


def cmd_flux_sweep(cfg: RunConfig, outdir: Path) -> list[Path]:
    sw = cfg.sweep
    grid = np.linspace(sw["flux_min"], sw["flux_max"], sw["flux_steps"])
    rows = []
    for flux, res in flux_sweep(cfg.fluxonium, grid, n_levels=max(3, sw["n_levels"])):
        rows.append([
            flux, res.nu(0, 1), res.nu(1, 2), res.nu(0, 2),
            res.n_elem(0, 1), res.n_elem(1, 2), res.n_elem(0, 2),
        ])
    return [write_table(outdir / "flux_sweep.csv", SPECTRUM_HEADER, rows, cfg.output_format)]


def _transmission_rows(cfg: RunConfig, dp_grid, pc_grid):
    cal = cfg.calibration
    rows = []
    for pc in pc_grid:
        drive = replace(cfg.drive, omega_c_mhz=cal.omega_c_mhz(float(pc)))
        _, t = spectrum_arrays(eit_spectrum(cfg.lam, drive, dp_grid))
        for dp, tv in zip(dp_grid, t):
            rows.append([pc, dp, abs(tv), float(np.angle(tv))])
    return rows


MAP_HEADER = ["pc_dbm", "delta_p_mhz", "abs_t", "arg_t_rad"]


def cmd_transmission_map(cfg: RunConfig, outdir: Path) -> list[Path]:
    m = cfg.map
    dp_grid = _grid(m["dp_min_mhz"], m["dp_max_mhz"], m["dp_step_mhz"])
    pc_grid = _grid(m["pc_min_dbm"], m["pc_max_dbm"], m["pc_step_dbm"])
    rows = _transmission_rows(cfg, dp_grid, pc_grid)
    return [write_table(outdir / "transmission_map.csv", MAP_HEADER, rows, cfg.output_format)]


def _delay_curve(cfg: RunConfig):
    sp = cfg.spectroscopy
    dp_grid = _grid(sp["dp_min_mhz"], sp["dp_max_mhz"], sp["dp_step_mhz"])
    points = eit_spectrum(cfg.lam, cfg.drive, dp_grid)
    return group_delay(points)


def cmd_delay(cfg: RunConfig, outdir: Path) -> list[Path]:
    curve = _delay_curve(cfg)
    rows = [[dp, tau] for dp, tau in zip(curve.delta_p_mhz, curve.tau_d_ns)]
    return [write_table(outdir / "delay.csv", ["delta_p_mhz", "tau_d_ns"], rows,
                        cfg.output_format)]


def cmd_threshold(cfg: RunConfig, outdir: Path) -> list[Path]:
    value = eit_threshold(cfg.lam)
    print(f"omega_eit_mhz {fmt(value)}")
    return [write_table(outdir / "threshold.csv", ["omega_eit_mhz"], [[value]],
                        cfg.output_format)]


PULSE_HEADER = ["t_us", "re_in", "im_in", "re_out", "im_out", "oc_mhz"]
TRAJ_HEADER = ["t_us", "re_r00", "re_r11", "re_r22", "re_r02", "im_r02",
               "re_r01", "im_r01", "re_r12", "im_r12"]


def _pulse_grid(probe: PulseSpec, t_end: float, fmax_mhz: float) -> np.ndarray:
    """Uniform grid from center - 4 sigma to t_end satisfying the step rule."""
    step = 0.08 / (2.0 * np.pi * fmax_mhz)
    t0 = probe.center_us - 4.0 * probe.sigma_us
    n = int(np.ceil((t_end - t0) / step))
    return t0 + (t_end - t0) / n * np.arange(n + 1)


def _pulse_rows(record: PulseRecord, oc_samples, stride: int = 1):
    rows = []
    for i in range(0, record.t_us.size, stride):
        rows.append([
            record.t_us[i],
            record.v_in[i].real, record.v_in[i].imag,
            record.v_out[i].real, record.v_out[i].imag,
            oc_samples[i],
        ])
    return rows


def _traj_rows(record: PulseRecord, stride: int = 1):
    rows = []
    rho = record.rho
    for i in range(0, record.t_us.size, stride):
        r = rho[i]
        rows.append([
            record.t_us[i],
            r[0, 0].real, r[1, 1].real, r[2, 2].real,
            r[0, 2].real, r[0, 2].imag,
            r[0, 1].real, r[0, 1].imag,
            r[1, 2].real, r[1, 2].imag,
        ])
    return rows


def cmd_pulse(cfg: RunConfig, outdir: Path) -> list[Path]:
    probe = cfg.pulse
    oc = cfg.drive.omega_c_mhz
    fmax = max(cfg.lam.g02_mhz, abs(probe.carrier_detuning_mhz), oc, probe.amp_mhz)
    grid = _pulse_grid(probe, probe.center_us + 5.0 * probe.sigma_us, fmax)
    control = lambda t: np.full_like(np.asarray(t, dtype=float), oc)
    record = propagate_pulse(cfg.lam, probe, control, grid)
    stride = max(1, grid.size // 4000)
    arts = [
        write_table(outdir / "pulse.csv", PULSE_HEADER,
                    _pulse_rows(record, control(grid), stride), cfg.output_format),
        write_table(outdir / "trajectory.csv", TRAJ_HEADER,
                    _traj_rows(record, stride), cfg.output_format),
    ]
    return arts


def cmd_store(cfg: RunConfig, outdir: Path) -> list[Path]:
    probe = cfg.pulse
    sched = cfg.storage
    t_end = sched.t_off_us + sched.tau_s_us + 6.0 * sched.ramp_us + 4.0 * probe.sigma_us + 0.2
    fmax = max(cfg.lam.g02_mhz, abs(probe.carrier_detuning_mhz),
               sched.oc_high_mhz, probe.amp_mhz)
    grid = _pulse_grid(probe, t_end, fmax)
    record, window = run_storage(cfg.lam, probe, sched, grid)
    stride = max(1, grid.size // 4000)
    print(f"retrieval_window_us {fmt(window[0])} {fmt(window[1])}")
    arts = [
        write_table(outdir / "store.csv", PULSE_HEADER,
                    _pulse_rows(record, sched.control_envelope(grid), stride),
                    cfg.output_format),
        write_table(outdir / "store_trajectory.csv", TRAJ_HEADER,
                    _traj_rows(record, stride), cfg.output_format),
    ]
    return arts


AIC_HEADER = ["oc_mhz", "rss_eit", "rss_ats", "w_eit", "w_ats"]


def cmd_aic(cfg: RunConfig, outdir: Path) -> list[Path]:
    a = cfg.aic
    oc_grid = np.linspace(a["oc_min_mhz"], a["oc_max_mhz"], a["oc_steps"])
    crossover, rows = aic_crossover(
        cfg.lam, oc_grid, noise_sigma=a["noise"], seed=cfg.seed,
        replicas=a["replicas"], omega_p_mhz=cfg.drive.omega_p_mhz, jobs=cfg.jobs,
    )
    path = write_table(outdir / "aic.csv", AIC_HEADER, rows, cfg.output_format)
    print(f"crossover_mhz {fmt(crossover)}")
    return [path]


def _figure_fig2a(cfg: RunConfig, outdir: Path) -> Path:
    dp_grid = _grid(-20.0, 20.0, 0.25)
    pc_grid = _grid(-172.0, -142.0, 2.0)
    rows = _transmission_rows(cfg, dp_grid, pc_grid)
    return write_table(outdir / "fig2a_power_map.csv", MAP_HEADER, rows, cfg.output_format)


def _figure_fig2b(cfg: RunConfig, outdir: Path) -> Path:
    dp_grid = _grid(-20.0, 20.0, 0.1)
    rows = _transmission_rows(cfg, dp_grid, np.array([-172.0, -157.0, -142.0]))
    return write_table(outdir / "fig2b_linecuts.csv", MAP_HEADER, rows, cfg.output_format)


def _figure_fig3(cfg: RunConfig, outdir: Path) -> Path:
    """Window-center delay vs control amplitude, plus the full curve at 2.6 MHz."""
    sp = cfg.spectroscopy
    dp_grid = _grid(sp["dp_min_mhz"], sp["dp_max_mhz"], sp["dp_step_mhz"])
    rows = []
    for oc in _grid(1.0, 8.0, 0.25):
        drive = replace(cfg.drive, omega_c_mhz=float(oc))
        curve = group_delay(eit_spectrum(cfg.lam, drive, dp_grid))
        i = int(np.nanargmax(curve.tau_d_ns))
        rows.append([oc, curve.delta_p_mhz[i], curve.tau_d_ns[i]])
    drive = replace(cfg.drive, omega_c_mhz=2.6)
    curve = group_delay(eit_spectrum(cfg.lam, drive, dp_grid))
    for dp, tau in zip(curve.delta_p_mhz, curve.tau_d_ns):
        rows.append([2.6, dp, tau])
    return write_table(outdir / "fig3_delay.csv", ["oc_mhz", "delta_p_mhz", "tau_d_ns"],
                       rows, cfg.output_format)


def _figure_envelopes(cfg: RunConfig, outdir: Path) -> Path:
    """Slow/fast/weak-control/reference envelopes plus the storage trace."""
    lam = cfg.lam
    rows = []
    header = ["case"] + PULSE_HEADER

    probe = PulseSpec(sigma_us=1.0, amp_mhz=cfg.pulse.amp_mhz, center_us=0.0)
    grid_ref = _pulse_grid(probe, 5.0, 500.0)
    constant = lambda oc: (lambda t: np.full_like(np.asarray(t, dtype=float), oc))

    cases = [
        ("reference", reference_pulse(lam, probe, constant(2.6), grid_ref), constant(2.6)),
    ]
    grid = _pulse_grid(probe, 5.0, max(lam.g02_mhz, 2.6))
    cases.append(("slow", propagate_pulse(lam, probe, constant(2.6), grid), constant(2.6)))
    fast_probe = PulseSpec(1.0, cfg.pulse.amp_mhz, 0.0, carrier_detuning_mhz=1.2)
    cases.append(("fast", propagate_pulse(lam, fast_probe, constant(2.6), grid), constant(2.6)))
    cases.append(("weak_control", propagate_pulse(lam, probe, constant(0.5), grid), constant(0.5)))

    s_probe = PulseSpec(sigma_us=0.05, amp_mhz=cfg.pulse.amp_mhz, center_us=0.0)
    sched = StorageSchedule(oc_high_mhz=5.7, t_off_us=0.05, tau_s_us=0.5, ramp_us=0.02)
    s_grid = _pulse_grid(s_probe, 1.2, max(lam.g02_mhz, sched.oc_high_mhz))
    s_record, _ = run_storage(lam, s_probe, sched, s_grid)
    cases.append(("storage", s_record, sched.control_envelope))

    for name, record, control in cases:
        stride = max(1, record.t_us.size // 1500)
        for row in _pulse_rows(record, np.asarray(control(record.t_us)), stride):
            rows.append([name] + row)
    return write_table(outdir / "fig3d4a_envelopes.csv", header, rows, cfg.output_format)


def _figure_weights(cfg: RunConfig, outdir: Path) -> Path:
    a = cfg.aic
    oc_grid = np.linspace(a["oc_min_mhz"], a["oc_max_mhz"], a["oc_steps"])
    try:
        crossover, rows = aic_crossover(
            cfg.lam, oc_grid, noise_sigma=a["noise"], seed=cfg.seed,
            replicas=a["replicas"], omega_p_mhz=cfg.drive.omega_p_mhz, jobs=cfg.jobs,
        )
        print(f"crossover_mhz {fmt(crossover)}")
    except NoCrossingError as exc:
        rows = exc.curve
        print("crossover_mhz none")
    return write_table(outdir / "figs3e_weights.csv", AIC_HEADER, rows, cfg.output_format)


def cmd_figures(cfg: RunConfig, outdir: Path) -> list[Path]:
    return [
        _figure_fig2a(cfg, outdir),
        _figure_fig2b(cfg, outdir),
        _figure_fig3(cfg, outdir),
        _figure_envelopes(cfg, outdir),
        _figure_weights(cfg, outdir),
    ]


_HANDLERS = {
    "spectrum": cmd_spectrum,
    "flux-sweep": cmd_flux_sweep,
    "transmission-map": cmd_transmission_map,
    "delay": cmd_delay,
    "threshold": cmd_threshold,
    "pulse": cmd_pulse,
    "store": cmd_store,
    "aic": cmd_aic,
    "figures": cmd_figures,
}


def dispatch(subcommand: str, cfg: RunConfig) -> ResultManifest:
    if subcommand not in _HANDLERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    artifacts = _HANDLERS[subcommand](cfg, outdir)
    duration = time.perf_counter() - t0
    manifest = ResultManifest(
        subcommand=subcommand,
        config_hash=cfg.config_hash,
        artifacts=[p.name for p in artifacts],
        duration_s=duration,
    )
    (outdir / "manifest.json").write_text(
        json.dumps(
            {
                "subcommand": manifest.subcommand,
                "config_hash": manifest.config_hash,
                "artifacts": manifest.artifacts,
                "duration_s": round(manifest.duration_s, 3),
            },
            indent=1,
        )
        + "\n"
    )
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxlight",
        description="Single-fluxonium Lambda-system simulator (EIT, slow light, storage).",
    )
    parser.add_argument("--config", help="INI config file; defaults to the device profile")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--seed", type=int, help="root RNG seed override")
    parser.add_argument("--jobs", type=int, help="worker pool size for grid points")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        if name == "aic":
            p.add_argument("--oc-min", type=float, dest="oc_min")
            p.add_argument("--oc-max", type=float, dest="oc_max")
            p.add_argument("--oc-steps", type=int, dest="oc_steps")
            p.add_argument("--noise", type=float)
            p.add_argument("--seed", type=int, dest="aic_seed")
            p.add_argument("--replicas", type=int)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.subcommand == "aic":
            aic = dict(cfg.aic)
            for flag, key in (("oc_min", "oc_min_mhz"), ("oc_max", "oc_max_mhz"),
                              ("oc_steps", "oc_steps"), ("noise", "noise"),
                              ("replicas", "replicas")):
                value = getattr(args, flag)
                if value is not None:
                    aic[key] = value
            if args.aic_seed is not None:
                overrides["seed"] = args.aic_seed
            overrides["aic"] = aic
        if overrides:
            cfg = replace(cfg, **overrides)
        manifest = dispatch(args.subcommand, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SteadyStateError, StepSizeError, TruncationError, EigensolverError,
            np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except NoCrossingError as exc:
        print(f"no crossing: {exc}", file=sys.stderr)
        return 4
    print(
        f"{manifest.subcommand}: wrote {', '.join(manifest.artifacts)} "
        f"in {manifest.duration_s:.2f} s"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

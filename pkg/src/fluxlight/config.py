"""Strict INI configuration: sections per subsystem, canonical device defaults.

Any key or section not in the schema is an error, as is any value violating a
parameter invariant; error messages carry the offending ``section.key`` path.
A config file only needs the keys it wants to override; everything else falls
back to the packaged device profile.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .lindblad import DriveParams, LambdaParams
from .pulses import PulseSpec, StorageSchedule
from .scattering import PowerCalibration
from .spectrum import FluxoniumParams


class ConfigError(Exception):
    pass


_SCHEMA = {
    "fluxonium": {
        "e_j_ghz": float, "e_c_ghz": float, "e_l_ghz": float,
        "flux": float, "basis_size": int,
    },
    "lambda": {
        "nu02_ghz": float, "nu12_ghz": float, "nu01_mhz": float,
        "g02_mhz": float, "g12_mhz": float, "g01_mhz": float, "g10_mhz": float,
        "gphi11_mhz": float, "gphi22_mhz": float, "mismatch_rad": float,
    },
    "drive": {
        "delta_p_mhz": float, "delta_c_mhz": float,
        "omega_p_mhz": float, "omega_c_mhz": float,
    },
    "spectroscopy": {"dp_min_mhz": float, "dp_max_mhz": float, "dp_step_mhz": float},
    "map": {
        "dp_min_mhz": float, "dp_max_mhz": float, "dp_step_mhz": float,
        "pc_min_dbm": float, "pc_max_dbm": float, "pc_step_dbm": float,
        "k0_mhz": float,
    },
    "pulse": {"sigma_us": float, "amp_mhz": float, "center_us": float, "detuning_mhz": float},
    "storage": {"oc_high_mhz": float, "t_off_us": float, "tau_s_us": float, "ramp_us": float},
    "aic": {
        "oc_min_mhz": float, "oc_max_mhz": float, "oc_steps": int,
        "noise": float, "replicas": int,
    },
    "sweep": {"flux_min": float, "flux_max": float, "flux_steps": int, "n_levels": int},
    "run": {"seed": int, "jobs": int},
    "output": {"directory": str, "format": str},
}


@dataclass(frozen=True)
class RunConfig:
    fluxonium: FluxoniumParams
    lam: LambdaParams
    drive: DriveParams
    pulse: PulseSpec
    storage: StorageSchedule
    calibration: PowerCalibration
    spectroscopy: dict
    map: dict
    aic: dict
    sweep: dict
    seed: int
    jobs: int
    output_dir: str
    output_format: str
    config_hash: str


def _read_ini(text: str, origin: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {origin}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _default_text() -> str:
    return (resources.files("fluxlight") / "data" / "device_default.ini").read_text()


def _convert(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}") from exc


def _merged_values(user: dict[str, dict[str, str]]) -> dict[str, dict]:
    for section, keys in user.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in keys:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")

    base = _read_ini(_default_text(), "device_default.ini")
    values: dict[str, dict] = {}
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key in keys:
            raw = user.get(section, {}).get(key, base[section][key])
            values[section][key] = _convert(section, key, raw)
    return values


def _build(values: dict[str, dict], config_hash: str) -> RunConfig:
    def guarded(section, factory, **kwargs):
        try:
            return factory(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from exc

    flx = values["fluxonium"]
    lam = values["lambda"]
    drv = values["drive"]
    pls = values["pulse"]
    sto = values["storage"]
    out_format = values["output"]["format"]
    if out_format not in ("csv", "json"):
        raise ConfigError(f"output.format: expected csv or json, got {out_format!r}")

    return RunConfig(
        fluxonium=guarded(
            "fluxonium", FluxoniumParams,
            e_j=flx["e_j_ghz"], e_c=flx["e_c_ghz"], e_l=flx["e_l_ghz"],
            flux=flx["flux"], basis_size=flx["basis_size"],
        ),
        lam=guarded(
            "lambda", LambdaParams,
            nu02_ghz=lam["nu02_ghz"], nu12_ghz=lam["nu12_ghz"], nu01_mhz=lam["nu01_mhz"],
            g02_mhz=lam["g02_mhz"], g12_mhz=lam["g12_mhz"],
            g01_mhz=lam["g01_mhz"], g10_mhz=lam["g10_mhz"],
            gphi11_mhz=lam["gphi11_mhz"], gphi22_mhz=lam["gphi22_mhz"],
            mismatch_rad=lam["mismatch_rad"],
        ),
        drive=guarded(
            "drive", DriveParams,
            delta_p_mhz=drv["delta_p_mhz"], delta_c_mhz=drv["delta_c_mhz"],
            omega_p_mhz=drv["omega_p_mhz"], omega_c_mhz=drv["omega_c_mhz"],
        ),
        pulse=guarded(
            "pulse", PulseSpec,
            sigma_us=pls["sigma_us"], amp_mhz=pls["amp_mhz"],
            center_us=pls["center_us"], carrier_detuning_mhz=pls["detuning_mhz"],
        ),
        storage=guarded(
            "storage", StorageSchedule,
            oc_high_mhz=sto["oc_high_mhz"], t_off_us=sto["t_off_us"],
            tau_s_us=sto["tau_s_us"], ramp_us=sto["ramp_us"],
        ),
        calibration=guarded("map", PowerCalibration, k0_mhz=values["map"]["k0_mhz"]),
        spectroscopy=values["spectroscopy"],
        map=values["map"],
        aic=values["aic"],
        sweep=values["sweep"],
        seed=values["run"]["seed"],
        jobs=values["run"]["jobs"],
        output_dir=values["output"]["directory"],
        output_format=out_format,
        config_hash=config_hash,
    )


def parse_config(path: str | Path | None = None) -> RunConfig:
    """Load a config file (or pure defaults when path is None), strictly."""
    if path is None:
        raw = _default_text().encode()
        user: dict[str, dict[str, str]] = {}
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw = path.read_bytes()
        user = _read_ini(raw.decode(), str(path))
    digest = hashlib.sha256(raw).hexdigest()
    return _build(_merged_values(user), digest)


def parse_config_text(text: str) -> RunConfig:
    """Parse config from a string; used by tests and embedded recipes."""
    digest = hashlib.sha256(text.encode()).hexdigest()
    return _build(_merged_values(_read_ini(text, "<string>")), digest)

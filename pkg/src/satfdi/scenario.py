"""Scenario configuration: dataclasses, INI parsing, presets, and the
Monte-Carlo initial-condition sampler.

Config files speak kilometers and degrees (matching the mission tables);
everything is converted to SI/radians here at the boundary.
"""
from __future__ import annotations

import configparser
import hashlib
import importlib.resources
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .constants import DEG, DEG_PER_HOUR, EARTH
from .dynamics import DragParams, ForceModel, InertiaTensor, SimulationGrid
from .orbits import OrbitalElements
from .sensors import FaultSpec, GyroNoiseSpec, RangingNoiseSpec


class ConfigError(ValueError):
    """Malformed or out-of-range scenario configuration."""


@dataclass(frozen=True)
class ElementOffsets:
    """Secondary-satellite element offsets relative to the primary (SI/rad)."""

    da: float = 0.0
    de: float = 0.0
    di: float = 0.0
    dargp: float = 0.0
    draan: float = 0.0
    dta: float = 0.0

    def apply(self, el: OrbitalElements) -> OrbitalElements:
        return OrbitalElements(a=el.a + self.da, e=el.e + self.de, i=el.i + self.di,
                               argp=el.argp + self.dargp, raan=el.raan + self.draan,
                               ta=el.ta + self.dta)


@dataclass(frozen=True)
class UncertaintySpec:
    """Initial-condition standard deviations (SI/rad units)."""

    sigma_a: float = 0.0
    sigma_e: float = 0.0
    sigma_i: float = 0.0
    sigma_argp: float = 0.0
    sigma_raan: float = 0.0
    sigma_ta: float = 0.0
    sigma_omega0: float = 0.0   # rad/s, per axis

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise ConfigError(f"uncertainty.{name} must be non-negative")


@dataclass(frozen=True)
class FdiSettings:
    threshold: float = 0.0          # m^2/s^2; 0 means "calibrate first"
    quantile: float = 0.9999
    persistence: int = 3
    eps_coeff_rel: float = 1e-3
    eps_omega: float = 1e-3         # rad/s

    def __post_init__(self):
        if self.persistence < 1:
            raise ConfigError("fdi.persistence must be >= 1")
        if not 0.5 < self.quantile < 1.0:
            raise ConfigError("fdi.quantile must lie in (0.5, 1)")


@dataclass(frozen=True)
class ScenarioConfig:
    elements: OrbitalElements
    offsets: ElementOffsets
    omega0: np.ndarray              # rad/s, body frame
    inertia: InertiaTensor
    grid: SimulationGrid
    dt_meas: float
    gyro: GyroNoiseSpec = field(default_factory=GyroNoiseSpec)
    ranging: RangingNoiseSpec = field(default_factory=RangingNoiseSpec)
    fault: Optional[FaultSpec] = None
    forces: ForceModel = field(default_factory=ForceModel)
    model_j2_in_f: bool = False     # include the J2 difference term in f(t)
    fdi: FdiSettings = field(default_factory=FdiSettings)
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)

    def __post_init__(self):
        object.__setattr__(self, "omega0", np.asarray(self.omega0, dtype=float))
        if self.omega0.shape != (3,):
            raise ConfigError("omega0 must be a 3-vector")
        ratio = self.dt_meas / self.grid.dt
        if self.dt_meas <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("dt_meas must be a positive integer multiple of grid.dt")

    @property
    def decimation(self) -> int:
        return int(round(self.dt_meas / self.grid.dt))

    def with_fault(self, fault: Optional[FaultSpec]) -> "ScenarioConfig":
        return replace(self, fault=fault)

    def with_threshold(self, threshold: float) -> "ScenarioConfig":
        return replace(self, fdi=replace(self.fdi, threshold=threshold))


def sample_initial(cfg: ScenarioConfig, unc: UncertaintySpec,
                   rng: np.random.Generator) -> ScenarioConfig:
    """Perturb primary elements and initial rates by independent Gaussians.

    The secondary keeps its offsets relative to the perturbed primary, so the
    formation geometry is preserved. Eccentricity is clipped to stay elliptic.
    """
    el = cfg.elements
    draws = rng.normal(0.0, 1.0, 9)
    e_new = min(max(el.e + unc.sigma_e * draws[1], 0.0), 1.0 - 1e-9)
    new_el = OrbitalElements(
        a=el.a + unc.sigma_a * draws[0],
        e=e_new,
        i=min(max(el.i + unc.sigma_i * draws[2], 0.0), math.pi),
        argp=el.argp + unc.sigma_argp * draws[3],
        raan=el.raan + unc.sigma_raan * draws[4],
        ta=el.ta + unc.sigma_ta * draws[5],
    )
    new_w0 = cfg.omega0 + unc.sigma_omega0 * draws[6:9]
    return replace(cfg, elements=new_el, omega0=new_w0)


# ----------------------------------------------------------------------------
# INI config files

_SCHEMA = {
    "orbit": {"a_km": True, "e": True, "i_deg": True, "argp_deg": True,
              "raan_deg": True, "ta_deg": True},
    "secondary": {"delta_a_km": False, "delta_e": False, "delta_i_deg": False,
                  "delta_argp_deg": False, "delta_raan_deg": False,
                  "delta_ta_deg": False},
    "attitude": {"omega0_deg_s": True},
    "inertia": {"ixx_kgm2": True, "iyy_kgm2": True, "izz_kgm2": True},
    "grid": {"t_end_s": True, "dt_s": False, "dt_meas_s": False},
    "gyro": {"sigma_deg_hr": False},
    "ranging": {"sigma_m": False},
    "fault": {"axis": False, "kind": False, "value": False, "t_activate_s": False},
    "forces": {"j2": False, "drag": False, "model_j2_in_f": False,
               "cd": False, "area_m2": False, "mass_kg": False,
               "rho0_kgm3": False, "h0_km": False, "scale_height_km": False},
    "fdi": {"threshold": False, "quantile": False, "persistence": False,
            "eps_coeff_rel": False, "eps_omega_rad_s": False},
    "uncertainty": {"sigma_a_km": False, "sigma_e": False, "sigma_i_deg": False,
                    "sigma_argp_deg": False, "sigma_raan_deg": False,
                    "sigma_ta_deg": False, "sigma_omega0_deg_hr": False},
}


def _validate_keys(cp: configparser.ConfigParser, strict: bool):
    for section in cp.sections():
        if section not in _SCHEMA:
            if strict:
                raise ConfigError(f"unknown section [{section}]")
            continue
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                if strict:
                    raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in _SCHEMA.items():
        required = [k for k, req in keys.items() if req]
        if not required:
            continue
        if section not in cp:
            raise ConfigError(f"missing required section [{section}]")
        for k in required:
            if k not in cp[section]:
                raise ConfigError(f"missing required key {section}.{k}")


def _getfloat(cp, section, key, default=None):
    try:
        if default is None:
            return cp.getfloat(section, key)
        return cp.getfloat(section, key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: not a number ({exc})") from exc


def parse_config(path, strict: bool = True) -> ScenarioConfig:
    """Read a scenario INI file into a validated ScenarioConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    _validate_keys(cp, strict)

    try:
        elements = OrbitalElements(
            a=_getfloat(cp, "orbit", "a_km") * 1e3,
            e=_getfloat(cp, "orbit", "e"),
            i=_getfloat(cp, "orbit", "i_deg") * DEG,
            argp=_getfloat(cp, "orbit", "argp_deg") * DEG,
            raan=_getfloat(cp, "orbit", "raan_deg") * DEG,
            ta=_getfloat(cp, "orbit", "ta_deg") * DEG,
        )
    except ValueError as exc:
        raise ConfigError(f"orbit: {exc}") from exc

    offsets = ElementOffsets(
        da=_getfloat(cp, "secondary", "delta_a_km", 0.0) * 1e3,
        de=_getfloat(cp, "secondary", "delta_e", 0.0),
        di=_getfloat(cp, "secondary", "delta_i_deg", 0.0) * DEG,
        dargp=_getfloat(cp, "secondary", "delta_argp_deg", 0.0) * DEG,
        draan=_getfloat(cp, "secondary", "delta_raan_deg", 0.0) * DEG,
        dta=_getfloat(cp, "secondary", "delta_ta_deg", 0.0) * DEG,
    ) if "secondary" in cp else ElementOffsets()

    try:
        omega0 = np.array([float(x) for x in cp.get("attitude", "omega0_deg_s").split()])
    except ValueError as exc:
        raise ConfigError(f"attitude.omega0_deg_s: {exc}") from exc
    if omega0.shape != (3,):
        raise ConfigError("attitude.omega0_deg_s must have three components")
    omega0 = omega0 * DEG

    try:
        inertia = InertiaTensor(_getfloat(cp, "inertia", "ixx_kgm2"),
                                _getfloat(cp, "inertia", "iyy_kgm2"),
                                _getfloat(cp, "inertia", "izz_kgm2"))
        grid = SimulationGrid(0.0, _getfloat(cp, "grid", "t_end_s"),
                              _getfloat(cp, "grid", "dt_s", 0.01))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    dt_meas = _getfloat(cp, "grid", "dt_meas_s", 0.1)

    gyro = GyroNoiseSpec(sigma=_getfloat(cp, "gyro", "sigma_deg_hr", 3.6) * DEG_PER_HOUR)
    ranging = RangingNoiseSpec(sigma=_getfloat(cp, "ranging", "sigma_m", 0.001))

    fault = None
    if "fault" in cp and cp.get("fault", "axis", fallback="").strip():
        axis = cp.get("fault", "axis").strip().lower()
        kind = cp.get("fault", "kind", fallback="scale").strip().lower()
        value = _getfloat(cp, "fault", "value")
        if kind == "bias":
            value = value * DEG   # file carries deg/s
        fault = FaultSpec(axis=axis, kind=kind, value=value,
                          t_activate=_getfloat(cp, "fault", "t_activate_s"))
        if not grid.t0 <= fault.t_activate <= grid.t_end:
            raise ConfigError("fault.t_activate_s outside the simulation span")

    drag_params = DragParams(
        cd=_getfloat(cp, "forces", "cd", 2.5),
        area=_getfloat(cp, "forces", "area_m2", 1.0),
        mass=_getfloat(cp, "forces", "mass_kg", 4.1),
        rho0=_getfloat(cp, "forces", "rho0_kgm3", 1.225),
        h0=_getfloat(cp, "forces", "h0_km", 0.0) * 1e3,
        scale_height=_getfloat(cp, "forces", "scale_height_km", 8.5) * 1e3,
    ) if "forces" in cp else DragParams()
    forces = ForceModel(
        j2=cp.getboolean("forces", "j2", fallback=False),
        drag=cp.getboolean("forces", "drag", fallback=False),
        drag_params=drag_params,
    )

    fdi = FdiSettings(
        threshold=_getfloat(cp, "fdi", "threshold", 0.0),
        quantile=_getfloat(cp, "fdi", "quantile", 0.9999),
        persistence=int(_getfloat(cp, "fdi", "persistence", 3)),
        eps_coeff_rel=_getfloat(cp, "fdi", "eps_coeff_rel", 1e-3),
        eps_omega=_getfloat(cp, "fdi", "eps_omega_rad_s", 1e-3),
    )

    unc = UncertaintySpec(
        sigma_a=_getfloat(cp, "uncertainty", "sigma_a_km", 0.0) * 1e3,
        sigma_e=_getfloat(cp, "uncertainty", "sigma_e", 0.0),
        sigma_i=_getfloat(cp, "uncertainty", "sigma_i_deg", 0.0) * DEG,
        sigma_argp=_getfloat(cp, "uncertainty", "sigma_argp_deg", 0.0) * DEG,
        sigma_raan=_getfloat(cp, "uncertainty", "sigma_raan_deg", 0.0) * DEG,
        sigma_ta=_getfloat(cp, "uncertainty", "sigma_ta_deg", 0.0) * DEG,
        sigma_omega0=_getfloat(cp, "uncertainty", "sigma_omega0_deg_hr", 0.0) * DEG_PER_HOUR,
    )

    return ScenarioConfig(elements=elements, offsets=offsets, omega0=omega0,
                          inertia=inertia, grid=grid, dt_meas=dt_meas,
                          gyro=gyro, ranging=ranging, fault=fault, forces=forces,
                          model_j2_in_f=cp.getboolean("forces", "model_j2_in_f", fallback=False),
                          fdi=fdi, uncertainty=unc)


def load_preset(name: str) -> ScenarioConfig:
    """Load a bundled scenario preset ('scenario1' or 'scenario2')."""
    res = importlib.resources.files("satfdi.data").joinpath(f"{name}.cfg")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    with importlib.resources.as_file(res) as p:
        return parse_config(p)


def resolve_scenario(name_or_path: str) -> ScenarioConfig:
    """Accept a preset name or a config file path."""
    try:
        return load_preset(name_or_path)
    except ConfigError:
        return parse_config(name_or_path)


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable hash over the scenario's semantic content."""
    el, off, unc = cfg.elements, cfg.offsets, cfg.uncertainty
    d = cfg.forces.drag_params
    fields = [
        el.a, el.e, el.i, el.argp, el.raan, el.ta,
        off.da, off.de, off.di, off.dargp, off.draan, off.dta,
        *cfg.omega0, cfg.inertia.ixx, cfg.inertia.iyy, cfg.inertia.izz,
        cfg.grid.t0, cfg.grid.t_end, cfg.grid.dt, cfg.dt_meas,
        cfg.gyro.sigma, cfg.ranging.sigma,
        float(cfg.forces.j2), float(cfg.forces.drag), float(cfg.model_j2_in_f),
        d.cd, d.area, d.mass, d.rho0, d.h0, d.scale_height,
        cfg.fdi.threshold, cfg.fdi.quantile, float(cfg.fdi.persistence),
        cfg.fdi.eps_coeff_rel, cfg.fdi.eps_omega,
        unc.sigma_a, unc.sigma_e, unc.sigma_i, unc.sigma_argp, unc.sigma_raan,
        unc.sigma_ta, unc.sigma_omega0,
    ]
    if cfg.fault is not None and not callable(cfg.fault.value):
        fields += [float(cfg.fault.axis_index), 1.0 if cfg.fault.kind == "bias" else 0.0,
                   float(cfg.fault.value), cfg.fault.t_activate]
    blob = ",".join(repr(float(x)) for x in fields).encode()
    return hashlib.sha256(blob).hexdigest()[:16]

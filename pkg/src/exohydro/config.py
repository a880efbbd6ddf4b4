"""Bench configuration: component parameters, controller gains, sim timing.

A ``BenchConfig`` bundles every physical and control parameter of the
simulated test bench.  Defaults mirror the proof-of-concept hardware; any
field can be overridden from a YAML file or ``section.field=value`` strings.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml

from .hydraulics import (
    AccumulatorParams,
    CheckValveParams,
    CylinderParams,
    FrictionParams,
    LineParams,
    PumpParams,
    ValveModel,
)


@dataclass
class MotorParams:
    """Leader motor + ballscrew drive."""

    torque_constant_nm_a: float = 0.093   # [N*m/A]
    winding_resistance_ohm: float = 0.30  # [ohm] config estimate, not published
    bus_voltage_v: float = 48.0           # [V] supply limit (caps speed via emf)
    torque_peak_nm: float = 1.4           # [N*m]
    torque_cont_nm: float = 0.42          # [N*m]
    lead_m_per_rev: float = 0.020         # [m/rev] ballscrew lead
    reflected_mass_kg: float = 6.0        # [kg] rotor+screw inertia at the piston
    current_tau_s: float = 0.002          # [s] current-loop lag

    @property
    def lead_m_per_rad(self) -> float:
        return self.lead_m_per_rev / (2.0 * math.pi)

    @property
    def current_peak_a(self) -> float:
        return self.torque_peak_nm / self.torque_constant_nm_a

    def force_per_amp(self) -> float:
        """Piston force per ampere [N/A] through the ballscrew."""
        return self.torque_constant_nm_a / self.lead_m_per_rad


@dataclass
class PumpDriveParams:
    """Pump motor drive envelope."""

    speed_max_rad_s: float = 600.0  # [rad/s]
    speed_tau_s: float = 0.020      # [s] velocity-loop lag


@dataclass
class ContactParams:
    """Unilateral foot-ground contact and cylinder endstops."""

    stiffness_n_m: float = 2.0e6     # [N/m] penalty spring
    damping_ratio: float = 0.2       # of critical, vs the cart mass
    endstop_n_m: float = 5.0e6       # [N/m] cylinder stroke limits
    endstop_damping_ns_m: float = 2.0e3


@dataclass
class CartParams:
    """Vertically guided exoskeleton load (legs + rail)."""

    mass_kg: float = 13.4           # [kg]
    gravity_m_s2: float = 9.8
    follower_mass_kg: float = 2.0   # [kg] per follower piston+linkage
    follower_damping_ns_m: float = 50.0
    follower_bias_n: float = 15.0   # [N] extension preload keeping feet down


@dataclass
class ControlParams:
    """Force-controller gains beyond the component models."""

    knee_ratio: float = 0.18             # foot force / piston force
    kp_flow_ml_s_per_bar: float = 2.5    # pump-loop gain
    pump_dead_band_pa: float = 0.03e6    # hold window around the static target
    static_hold_speed_m_s: float = 0.02  # |leader speed| below which the
                                         # accumulator valve may block to hold
    pressure_max_pa: float = 3.45e6      # transmission rating
    contact_ref_eps: float = 0.1         # [N/kg] reference counts as loading
    valve_lead_s: float = 0.065          # schedule lead for leg valves
    rate_hz: float = 1000.0              # controller tick rate
    release_floor_pa: float = 0.03e6     # manifold target inside a release
                                         # window; kept above tank pressure so
                                         # the drive never sucks the supply
                                         # check valve open


@dataclass
class SimParams:
    """Integration settings."""

    dt_s: float = 1e-4                   # plant substep
    record_hz: float = 1000.0            # result sampling rate
    n_switch_flow_ml_s: float = 5.0      # polytropic slow/fast boundary
    n_switch_hysteresis: float = 0.5     # fraction of boundary for switch-back
    node_min_compliance_m3_pa: float = 2.0e-13  # sealed rod-chamber compliance
    supply_compliance_m3_pa: float = 4.0e-13
    valve_switch_energy_j: float = 1.75  # servo energy per full 180 deg switch


@dataclass
class BenchConfig:
    cylinder: CylinderParams = field(default_factory=CylinderParams)
    accumulator: AccumulatorParams = field(default_factory=AccumulatorParams)
    pump: PumpParams = field(default_factory=PumpParams.from_slopes)
    pump_drive: PumpDriveParams = field(default_factory=PumpDriveParams)
    valve: ValveModel = field(default_factory=ValveModel)
    check_valve: CheckValveParams = field(default_factory=CheckValveParams)
    line: LineParams = field(default_factory=LineParams.from_hose)
    friction: FrictionParams = field(default_factory=FrictionParams)
    motor: MotorParams = field(default_factory=MotorParams)
    contact: ContactParams = field(default_factory=ContactParams)
    cart: CartParams = field(default_factory=CartParams)
    control: ControlParams = field(default_factory=ControlParams)
    sim: SimParams = field(default_factory=SimParams)

    def copy(self) -> "BenchConfig":
        return dataclasses.replace(
            self, **{f.name: dataclasses.replace(getattr(self, f.name))
                     for f in fields(self)})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def default_config() -> BenchConfig:
    return BenchConfig()


def _coerce(current, raw):
    """Parse an override string against the type of the current value."""
    if isinstance(current, bool):
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean from {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(float(raw))
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, str):
        return str(raw)
    raise ValueError(f"unsupported override target type {type(current).__name__}")


def apply_override(cfg: BenchConfig, dotted_key: str, value) -> None:
    """Set ``section.field`` (or deeper) to a coerced value, in place."""
    parts = dotted_key.split(".")
    target = cfg
    for name in parts[:-1]:
        if not hasattr(target, name):
            raise KeyError(f"unknown config section {name!r} in {dotted_key!r}")
        target = getattr(target, name)
    leaf = parts[-1]
    if not is_dataclass(target) or not hasattr(target, leaf):
        raise KeyError(f"unknown config field {dotted_key!r}")
    setattr(target, leaf, _coerce(getattr(target, leaf), value))


def apply_overrides(cfg: BenchConfig, overrides: dict | None) -> BenchConfig:
    """Return a copy of cfg with dotted-key overrides applied."""
    out = cfg.copy()
    for key, value in (overrides or {}).items():
        apply_override(out, key, value)
    return out


def _merge_section(obj, data: dict, path: str) -> None:
    for key, value in data.items():
        if not hasattr(obj, key):
            raise KeyError(f"unknown config key {path}{key!r}")
        current = getattr(obj, key)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise ValueError(f"section {path}{key} must be a mapping")
            _merge_section(current, value, f"{path}{key}.")
        else:
            setattr(obj, key, _coerce(current, value))


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> BenchConfig:
    """Default config, optionally merged with a YAML file and overrides."""
    cfg = default_config()
    if path is not None:
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: top level must be a mapping")
        _merge_section(cfg, data, "")
    return apply_overrides(cfg, overrides)


def save_config(cfg: BenchConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))

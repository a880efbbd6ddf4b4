"""Per-motor demand series and performance metrics for the four actuation
configurations of a two-leg force-assistance system.

Configurations:
    A  one motor per leg, no passive offset
    B  one motor per leg, constant passive offset borne while the leg is loaded
    C  one shared motor routed to whichever legs bear load
    D  shared motor plus passive offset

All force series are normalized to carried mass (N/kg); speeds come from a
simple sinusoidal vertical center-of-mass model calibrated per task.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .profiles import (
    CONTACT_EPS,
    GRAVITY,
    JUMP_AERIAL_END,
    JUMP_DIP_END,
    JUMP_LAND_END,
    JUMP_LAUNCH_END,
    JUMP_TAKEOFF_SPEED,
    RUN_DUTY,
    WALK_DUTY,
    TwoLegScenario,
    default_scenario,
)

VARIANTS = ("A", "B", "C", "D")

# Peak vertical center-of-mass speed per task [m/s], single-leg convention.
V_PEAK = {
    "walk": 0.4,
    "run": 1.0,
    "jump": JUMP_TAKEOFF_SPEED,
    "sit_to_stand": 0.7,
    "constant": 0.0,
}


def rms(series: np.ndarray) -> float:
    """Root-mean-square over the full cycle (rectangle rule, uniform grid)."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("rms of empty series")
    return float(np.sqrt(np.mean(x * x)))


def com_velocity(scenario: TwoLegScenario) -> np.ndarray:
    """Vertical center-of-mass velocity series [m/s] for a task scenario.

    Periodic tasks use a sinusoid whose extrema land inside the stance
    windows (for walk, inside double support, where both legs move together);
    the jump event uses quarter-wave launch/landing ramps joined by ballistic
    flight.  Unknown tasks get zero speed.
    """
    t = scenario.times
    T = scenario.period
    task = scenario.task
    v_pk = V_PEAK.get(task)
    if v_pk is None or v_pk == 0.0:
        return np.zeros_like(t)

    if task == "walk":
        # Speed extrema land at the double-support centers, where both feet
        # are planted and the body rides both legs at once.
        ds_center = 0.5 * (scenario.phase_offset + WALK_DUTY) * T
        t0 = ds_center - T / 8.0
        return v_pk * np.sin(4.0 * np.pi * (t - t0) / T)
    if task == "run":
        t0 = 0.5 * RUN_DUTY * T - T / 8.0
        return v_pk * np.sin(4.0 * np.pi * (t - t0) / T)
    if task == "sit_to_stand":
        return v_pk * np.sin(2.0 * np.pi * t / T)
    # jump event: rise during launch, ballistic flight, landing decay
    v = np.zeros_like(t)
    launch = (t >= JUMP_DIP_END) & (t < JUMP_LAUNCH_END)
    sl = (t[launch] - JUMP_DIP_END) / (JUMP_LAUNCH_END - JUMP_DIP_END)
    v[launch] = v_pk * np.sin(0.5 * np.pi * sl)
    aerial = (t >= JUMP_LAUNCH_END) & (t < JUMP_AERIAL_END)
    v[aerial] = v_pk - GRAVITY * (t[aerial] - JUMP_LAUNCH_END)
    land = (t >= JUMP_AERIAL_END) & (t < JUMP_LAND_END)
    sd = (t[land] - JUMP_AERIAL_END) / (JUMP_LAND_END - JUMP_AERIAL_END)
    v[land] = -v_pk * np.cos(0.5 * np.pi * sd)
    return v


@dataclass
class MotorDemand:
    """Dynamic force and speed series each motor must deliver.

    f_dyn and speed have shape (n_motors, n_samples); f_dyn is N/kg, speed
    m/s.  Configurations A/B carry two motor rows, C/D a single shared row.
    """

    variant: str
    f_dyn: np.ndarray
    speed: np.ndarray
    f_stat: float
    dt: float
    task: str = ""

    @property
    def n_motors(self) -> int:
        return int(self.f_dyn.shape[0])


def demand(scenario: TwoLegScenario, variant: str, f_stat: float = 0.0) -> MotorDemand:
    """Transform a two-leg GRF scenario into per-motor dynamic demand.

    f_stat is the passive offset (N/kg); it only participates in variants B
    and D.  The offset is subtracted only while the leg (B) or the shared
    circuit (D) bears load, so an unloaded leg always reads zero demand.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if f_stat < 0.0:
        raise ValueError("f_stat must be non-negative")
    legs = scenario.legs
    vy = com_velocity(scenario)
    masks = scenario.contact_masks()
    leg_speed = vy * masks  # speed only counts while generating force

    if variant == "A":
        return MotorDemand(variant, legs.copy(), leg_speed, 0.0, scenario.dt, scenario.task)
    if variant == "B":
        f = np.where(legs > 0.0, legs - f_stat, 0.0)
        return MotorDemand(variant, f, leg_speed, f_stat, scenario.dt, scenario.task)

    n = scenario.contact_count()
    total = scenario.total()
    shared = np.where(n > 0, total / np.maximum(n, 1), 0.0)
    shared_speed = vy * n  # connected legs move together, flows add
    if variant == "C":
        return MotorDemand(variant, shared[None, :], shared_speed[None, :], 0.0,
                           scenario.dt, scenario.task)
    f = np.where(n > 0, shared - f_stat, 0.0)
    return MotorDemand(variant, f[None, :], shared_speed[None, :], f_stat,
                       scenario.dt, scenario.task)


@dataclass
class DemandMetrics:
    """Cycle metrics of one demand series (worst motor where it matters)."""

    f_dyn_rms: float
    f_dyn_peak: float
    mean_abs_power: float  # [W/kg] mean |f * v| per motor
    v_max: float
    per_motor_rms: tuple = field(default_factory=tuple)


def metrics(dem: MotorDemand) -> DemandMetrics:
    per_rms = tuple(rms(row) for row in dem.f_dyn)
    power = np.abs(dem.f_dyn * dem.speed)
    return DemandMetrics(
        f_dyn_rms=max(per_rms),
        f_dyn_peak=float(np.max(np.abs(dem.f_dyn))),
        mean_abs_power=float(np.max(np.mean(power, axis=1))),
        v_max=float(np.max(np.abs(dem.speed))),
        per_motor_rms=per_rms,
    )


@dataclass
class EfficiencyParams:
    """Electrical-side parameters for the battery-power estimate.

    winding_resistance has no default on purpose: it is rig-specific and must
    come from the caller's configuration.
    """

    winding_resistance: float          # [ohm]
    torque_constant: float = 0.093     # [N*m/A]
    motor_to_output_ratio: float = 1.0 / (0.020 / (2.0 * np.pi))  # [rad/m]
    eta_gen: float = 0.9
    eta_regen: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.eta_gen <= 1.0 or not 0.0 <= self.eta_regen <= 1.0:
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.winding_resistance < 0.0 or self.torque_constant <= 0.0:
            raise ValueError("bad electrical parameters")


def loss_fraction(eta: float) -> float:
    """Round-trip conversion loss factor (1/eta_gen - eta_regen) at eta_gen
    = eta_regen = eta.  0.211 at eta 0.9, 0.729 at eta 0.7."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return 1.0 / eta - eta


def battery_power(dem: MotorDemand, eff: EfficiencyParams, mass: float = 1.0) -> float:
    """Mean battery draw [W] for a cyclic demand carried by ``mass`` kg.

    Joule term from the rms winding current plus the round-trip conversion
    loss on the mean absolute dynamic power; with the demand's negative work
    assumed recovered at eta_regen and positive work generated at eta_gen,
    each contributes half the mean absolute power.
    """
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    gain = mass / (eff.torque_constant * eff.motor_to_output_ratio)  # f -> A
    joule = 0.0
    conv = 0.0
    for row_f, row_v in zip(dem.f_dyn, dem.speed):
        i_rms = rms(row_f) * gain
        joule += eff.winding_resistance * i_rms * i_rms
        conv += float(np.mean(np.abs(row_f * row_v))) * mass
    frac = 1.0 / eff.eta_gen - eff.eta_regen
    return joule + 0.5 * frac * conv


def design_table(tasks: tuple = ("walk", "run", "jump", "sit_to_stand"),
                 dt: float = 1e-3,
                 f_stat_map: dict | None = None) -> list[dict]:
    """Metric grid over tasks x variants, one dict per row.

    Offsets for B and D default to the constrained optimum on the matching
    demand series; f_stat_map[(task, variant)] overrides.  The jump row is an
    aperiodic event, so rms and power are omitted (None) and only peaks and
    speeds are reported.
    """
    from .optimizer import offset_problem, optimal_offset

    f_stat_map = f_stat_map or {}
    rows = []
    for task in tasks:
        scenario = default_scenario(task, dt)
        for variant in VARIANTS:
            f_stat = 0.0
            if variant in ("B", "D"):
                f_stat = f_stat_map.get((task, variant), -1.0)
                if f_stat < 0.0:
                    f_stat = optimal_offset(offset_problem(scenario, variant)).f_stat
            dem = demand(scenario, variant, f_stat)
            m = metrics(dem)
            event = scenario.period <= 0.0
            rows.append({
                "task": task,
                "variant": variant,
                "f_stat": round(f_stat, 4),
                "f_dyn_rms": None if event else round(m.f_dyn_rms, 4),
                "f_dyn_peak": round(m.f_dyn_peak, 4),
                "mean_abs_power": None if event else round(m.mean_abs_power, 4),
                "v_max": round(m.v_max, 4),
            })
    return rows


def rms_reduction_ratios(table: list[dict]) -> dict:
    """rms(A)/rms(D) per periodic task, from a design_table result."""
    by = {(r["task"], r["variant"]): r for r in table}
    out = {}
    for (task, variant), row in by.items():
        if variant != "A" or row["f_dyn_rms"] in (None, 0):
            continue
        d = by.get((task, "D"))
        if d and d["f_dyn_rms"]:
            out[task] = round(row["f_dyn_rms"] / d["f_dyn_rms"], 4)
    return out

"""Normalized vertical ground-reaction-force profiles and two-leg scenarios.

Profiles are stored as force per unit carried mass (N/kg) on a uniform time
grid.  Periodic tasks (walk, run, sit-to-stand, constant) represent exactly
one cycle; aperiodic tasks (jump) set ``period = 0`` and the sample array
covers the whole event.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

GRAVITY = 9.8  # [m/s^2]

DEFAULT_DT = 1e-3       # [s] sample spacing
CONTACT_EPS = 0.1       # [N/kg] force threshold that counts as ground contact

# Calibration constants for the synthesized waveforms.  Peaks follow the
# per-leg targets used throughout the metric tables; duty factors and the
# cycle-mean-supports-bodyweight property pin the remaining freedom.
WALK_PERIOD = 1.1       # [s] stride time at fast walking speed
WALK_DUTY = 0.585       # stance fraction -> ~15% double support at 0.5 offset
WALK_PEAK = 13.4        # [N/kg] per-leg stance peak
WALK_EDGE = 0.10        # loading/unloading ramp length, fraction of stance
WALK_BUMP_WIDTH = 0.22  # width of each stance bump, fraction of stance
WALK_BUMP_CENTER = 0.25  # first bump center, fraction of stance

RUN_PERIOD = 0.7        # [s] stride time
RUN_PEAK = 26.6         # [N/kg] per-leg stance peak
# A half-sine-squared stance at this peak supports body weight on average
# exactly when the stance fraction is g/peak (~37% duty, aerial otherwise).
RUN_DUTY = GRAVITY / RUN_PEAK

SIT_STAND_PERIOD = 3.0  # [s] one sit->stand->sit repetition
SIT_STAND_DUTY = 0.97   # legs unloaded (weight on the seat) between reps
SIT_STAND_EDGE = 0.10   # rise/fall length, fraction of the loaded window

JUMP_PEAK = 9.9         # [N/kg] per-leg launch/landing peak
JUMP_TAKEOFF_SPEED = 2.7  # [m/s] upward speed at takeoff

TASKS = ("walk", "run", "jump", "sit_to_stand", "constant")


@dataclass
class GrfProfile:
    """Single-leg GRF waveform on a uniform grid.

    samples are N/kg; ``period == 0`` marks an aperiodic event whose samples
    span the full duration.
    """

    task: str
    dt: float
    samples: np.ndarray
    period: float
    n_clamped: int = 0  # negative input samples clamped on load

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def contact_mask(self, eps: float = CONTACT_EPS) -> np.ndarray:
        return self.samples > eps


@dataclass
class TwoLegScenario:
    """Pair of leg profiles for one task, plus the phase relation.

    legs has shape (2, n); row 0 is the reference leg, row 1 the shifted one.
    """

    task: str
    dt: float
    period: float
    legs: np.ndarray
    phase_offset: float
    contact_eps: float = CONTACT_EPS

    @property
    def n_samples(self) -> int:
        return int(self.legs.shape[1])

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def contact_masks(self) -> np.ndarray:
        """Boolean (2, n): which legs bear load at each sample."""
        return self.legs > self.contact_eps

    def contact_count(self) -> np.ndarray:
        """Integer (n,): number of load-bearing legs at each sample."""
        return self.contact_masks().sum(axis=0)

    def total(self) -> np.ndarray:
        return self.legs.sum(axis=0)


def _raised_cosine(s: np.ndarray, center: float, half_width: float) -> np.ndarray:
    u = np.clip((s - center) / half_width, -1.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * u))


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _stance_phase(t: np.ndarray, period: float, duty: float) -> np.ndarray:
    """Phase within stance in [0, 1), or -1 when the leg is in swing."""
    cyc = np.mod(t, period) / period
    s = cyc / duty
    return np.where(cyc < duty, s, -1.0)


def _walk_plateau_level(duty: float, peak: float, edge: float, bump_w: float) -> float:
    # Per-leg cycle mean must be g/2 = duty * (L*(1 - edge) + (peak - L)*bump_w):
    # the smoothstep plateau contributes L*(1 - edge), the two raised-cosine
    # bumps (height peak - L, width bump_w each) contribute their half-area.
    return (0.5 * GRAVITY / duty - peak * bump_w) / (1.0 - edge - bump_w)


def _walk_samples(t: np.ndarray, period: float, duty: float, peak: float) -> np.ndarray:
    s = _stance_phase(t, period, duty)
    sc = np.where(s < 0, 0.0, s)
    level = _walk_plateau_level(duty, peak, WALK_EDGE, WALK_BUMP_WIDTH)
    window = _smoothstep(sc / WALK_EDGE) * _smoothstep((1.0 - sc) / WALK_EDGE)
    f = level * window
    # Loading-response and push-off bumps riding on the plateau.
    for center in (WALK_BUMP_CENTER, 1.0 - WALK_BUMP_CENTER):
        f += (peak - level) * window * _raised_cosine(sc, center, 0.5 * WALK_BUMP_WIDTH)
    return np.where(s < 0, 0.0, f)


def _run_samples(t: np.ndarray, period: float, duty: float, peak: float) -> np.ndarray:
    # Single raised-cosine stance bump: peak * sin^2(pi s).
    s = _stance_phase(t, period, duty)
    f = peak * np.sin(np.pi * np.clip(s, 0.0, 1.0)) ** 2
    return np.where(s < 0, 0.0, f)


# Jump event segment boundaries [s]; aerial length matches the ballistic
# flight time for the takeoff speed.
JUMP_STAND_END = 0.30
JUMP_DIP_END = 0.50
JUMP_LAUNCH_END = 0.85
JUMP_AERIAL_END = JUMP_LAUNCH_END + 2.0 * JUMP_TAKEOFF_SPEED / GRAVITY
JUMP_LAND_END = JUMP_AERIAL_END + 0.30
JUMP_DURATION = JUMP_AERIAL_END + 0.60


def _jump_samples(t: np.ndarray, peak: float) -> np.ndarray:
    stand = 0.5 * GRAVITY
    f = np.full_like(t, stand)
    # countermovement dip before the launch ramp
    dip = (t >= JUMP_STAND_END) & (t < JUMP_DIP_END)
    sd = (t[dip] - JUMP_STAND_END) / (JUMP_DIP_END - JUMP_STAND_END)
    f[dip] = stand * (1.0 - 0.6 * np.sin(np.pi * sd))
    # quadratic launch ramp up to the takeoff cutoff
    launch = (t >= JUMP_DIP_END) & (t < JUMP_LAUNCH_END)
    sl = (t[launch] - JUMP_DIP_END) / (JUMP_LAUNCH_END - JUMP_DIP_END)
    f[launch] = stand + (peak - stand) * sl * sl
    # aerial: unloaded
    f[(t >= JUMP_LAUNCH_END) & (t < JUMP_AERIAL_END)] = 0.0
    # landing bump
    land = (t >= JUMP_AERIAL_END) & (t < JUMP_LAND_END)
    c = 0.5 * (JUMP_AERIAL_END + JUMP_LAND_END)
    hw = 0.5 * (JUMP_LAND_END - JUMP_AERIAL_END)
    f[land] = peak * _raised_cosine(t[land], c, hw)
    return f


def _sit_to_stand_samples(t: np.ndarray, period: float, mean_target: float) -> np.ndarray:
    # Smoothstep plateau while the legs carry weight; a short fully-seated
    # rest (weight on the chair) separates repetitions.
    s = _stance_phase(t, period, SIT_STAND_DUTY)
    sc = np.where(s < 0, 0.0, s)
    w = _smoothstep(sc / SIT_STAND_EDGE) * _smoothstep((1.0 - sc) / SIT_STAND_EDGE)
    base = mean_target / (2.0 * SIT_STAND_DUTY * (1.0 - SIT_STAND_EDGE))
    return np.where(s < 0, 0.0, base * w)


def synth_profile(task: str, dt: float = DEFAULT_DT, *, level: float | None = None) -> GrfProfile:
    """Synthesize the bundled per-leg GRF waveform for a named task.

    level only applies to the constant task (N/kg per leg, default g/2).
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if dt <= 0:
        raise ValueError("dt must be positive")

    if task == "walk":
        period = WALK_PERIOD
        t = np.arange(round(period / dt)) * dt
        return GrfProfile(task, dt, _walk_samples(t, period, WALK_DUTY, WALK_PEAK), period)
    if task == "run":
        period = RUN_PERIOD
        t = np.arange(round(period / dt)) * dt
        return GrfProfile(task, dt, _run_samples(t, period, RUN_DUTY, RUN_PEAK), period)
    if task == "jump":
        t = np.arange(round(JUMP_DURATION / dt)) * dt
        return GrfProfile(task, dt, _jump_samples(t, JUMP_PEAK), 0.0)
    if task == "sit_to_stand":
        period = SIT_STAND_PERIOD
        t = np.arange(round(period / dt)) * dt
        return GrfProfile(task, dt, _sit_to_stand_samples(t, period, GRAVITY), period)
    # constant
    period = 1.0
    lvl = 0.5 * GRAVITY if level is None else float(level)
    if lvl < 0:
        raise ValueError("constant level must be non-negative")
    t = np.arange(round(period / dt)) * dt
    return GrfProfile(task, dt, np.full(t.size, lvl), period)


def make_scenario(profile: GrfProfile, phase_offset: float = 0.0,
                  contact_eps: float = CONTACT_EPS) -> TwoLegScenario:
    """Build a two-leg scenario; leg 2 is leg 1 shifted by phase_offset cycles.

    Aperiodic profiles only admit phase_offset 0 (both legs in phase).
    """
    if profile.period <= 0.0 and phase_offset != 0.0:
        raise ValueError("aperiodic profiles only support in-phase scenarios")
    if not 0.0 <= phase_offset < 1.0:
        raise ValueError("phase_offset must lie in [0, 1)")
    shift = int(round(phase_offset * profile.n_samples))
    legs = np.vstack([profile.samples, np.roll(profile.samples, shift)])
    return TwoLegScenario(profile.task, profile.dt, profile.period, legs,
                          phase_offset, contact_eps)


def default_scenario(task: str, dt: float = DEFAULT_DT) -> TwoLegScenario:
    """Two-leg scenario with the task's customary phase relation.

    Walk and run alternate legs (0.5 cycle offset); jump and sit-to-stand
    load both legs together.
    """
    offset = 0.5 if task in ("walk", "run") else 0.0
    return make_scenario(synth_profile(task, dt), offset)


def save_profile_csv(profile: GrfProfile, path: str | Path) -> None:
    """Write the profile with header ``t_s,f_n_per_kg``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "f_n_per_kg"])
        for t, f in zip(profile.times, profile.samples):
            w.writerow([f"{t:.10g}", f"{f:.10g}"])


def load_profile_csv(path: str | Path, dt: float | None = None,
                     task: str = "custom", period: float | None = None) -> GrfProfile:
    """Load a ``t_s,f_n_per_kg`` CSV, resampling to a uniform grid.

    Negative force samples are clamped to zero and counted in
    ``profile.n_clamped``.  If period is omitted the full duration is treated
    as one cycle.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["t_s", "f_n_per_kg"]:
        raise ValueError(f"{path}: expected header 't_s,f_n_per_kg'")
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    t_raw, f_raw = data[:, 0], data[:, 1]
    if np.any(np.diff(t_raw) <= 0):
        raise ValueError(f"{path}: time column must be strictly increasing")

    if dt is None:
        steps = np.diff(t_raw)
        dt_est = float(np.median(steps))
        uniform = np.allclose(steps, dt_est, rtol=1e-9, atol=1e-12)
        dt = dt_est if uniform else DEFAULT_DT

    t_grid = np.arange(t_raw[0], t_raw[-1] + 0.5 * dt, dt)
    f = np.interp(t_grid, t_raw, f_raw)
    n_clamped = int(np.sum(f < 0.0))
    f = np.maximum(f, 0.0)
    per = float(period) if period is not None else t_grid.size * dt
    return GrfProfile(task, float(dt), f, per, n_clamped=n_clamped)


def shift_profile(profile: GrfProfile, phase: float) -> GrfProfile:
    """Circularly shift a periodic profile by a cycle fraction."""
    if profile.period <= 0.0:
        raise ValueError("cannot phase-shift an aperiodic profile")
    shift = int(round(phase * profile.n_samples))
    return replace(profile, samples=np.roll(profile.samples, shift))

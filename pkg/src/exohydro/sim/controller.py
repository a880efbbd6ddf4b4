"""Force controller and valve scheduling for the shared-actuation bench.

The controller runs at a fixed tick rate on measured pressures and the
leader encoder.  Per tick it produces a motor current command (feedforward
force law with friction compensation and static-pressure relief), a pump
speed command (proportional pressure loop with leak-cancelling
feedforward and a hold band), and angle commands for the three switching
valves.  Leg-valve commands come from a schedule precomputed from the
reference force timelines, shifted early by a fixed lead so the valves
arrive in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import BenchConfig
from ..hydraulics import friction_pressure_pa, pump_speed_cmd_rad_s


@dataclass
class TickOutput:
    i_cmd_a: float
    omega_cmd_rad_s: float
    theta_cmd_deg: tuple[float, float, float]
    p_dyn_pa: float
    p_stat_pa: float
    clamped: bool


class ForceController:
    """Feedforward force tracking plus the passive-unit pressure loop."""

    def __init__(self, cfg: BenchConfig, mass_kg: float,
                 knee_ratio: float | None = None,
                 friction_comp: bool = True):
        self.cfg = cfg
        self.mass = mass_kg
        ctl = cfg.control
        self.ratio = knee_ratio if knee_ratio is not None else ctl.knee_ratio
        self.area = cfg.cylinder.area_m2
        self.area_rod = cfg.cylinder.area_rod_m2
        self.k_force = cfg.motor.force_per_amp()
        self.i_peak = cfg.motor.current_peak_a
        self.eps = ctl.contact_ref_eps
        self.p_max = ctl.pressure_max_pa
        self.kp_pump = ctl.kp_flow_ml_s_per_bar / 1e5      # [mL/s/Pa]
        self.dead_band = ctl.pump_dead_band_pa
        self.v_hold = ctl.static_hold_speed_m_s
        self.th_coupled = cfg.valve.blocked_hi_deg
        self.p_floor = ctl.release_floor_pa
        self.friction_comp = friction_comp
        self.clamp_events = 0
        self.rate_hz = ctl.rate_hz
        self._prev_refs: tuple[float, float] | None = None
        self._prev_legs: tuple[float, float] | None = None
        self._unhold = 0

    def tick(self, meas: dict, f1_d: float, f2_d: float, f_stat_d: float,
             theta_legs: tuple[float, float],
             release: float = 0.0) -> TickOutput:
        mass, ratio = self.mass, self.ratio
        clamped = False

        # dynamic (shared) pressure reference.  The manifold acts on every
        # line whose spool is past the metering edge, so the demand
        # divides by the measured count of coupled lines: during a spool
        # transit the departing line still bleeds manifold pressure, and
        # halving the demand keeps the delivered total on the reference.
        demand = (f1_d > self.eps) or (f2_d > self.eps)
        n_conn = ((meas["th_l1"] > self.th_coupled)
                  + (meas["th_l2"] > self.th_coupled))
        if demand:
            p_dyn = (f1_d + f2_d) * mass / (max(n_conn, 1) * ratio * self.area)
        else:
            p_dyn = 0.0
        if release > 0.0:
            # blend toward the release floor rather than hard zero
            w = min(release, 1.0)
            p_dyn = (1.0 - w) * p_dyn + w * self.p_floor
        if p_dyn > self.p_max:
            p_dyn = self.p_max
            clamped = True
            self.clamp_events += 1

        # static (balancing) pressure target on the rod side
        p_stat = f_stat_d * mass / (ratio * self.area_rod)
        if p_stat > self.p_max:
            p_stat = self.p_max
            clamped = True
            self.clamp_events += 1
        static_on = p_stat > 1e3

        # accumulator valve: feed the rod side while balancing is on;
        # block (hold) only when on target and the rig is at rest.  A step
        # in the references or in the leg-valve commands pre-opens the
        # valve for a while: a sealed rod column locks the leader
        # hydraulically, so it must never stay sealed into a stroke.
        if self._prev_refs is not None:
            if (abs(f1_d - self._prev_refs[0]) > 2.0
                    or abs(f2_d - self._prev_refs[1]) > 2.0
                    or theta_legs != self._prev_legs):
                self._unhold = round(0.15 * self.rate_hz)
        self._prev_refs = (f1_d, f2_d)
        self._prev_legs = theta_legs
        at_rest = (abs(meas["v_l"]) < self.v_hold
                   and abs(meas.get("v_y", 0.0)) < self.v_hold)
        if self._unhold > 0:
            self._unhold -= 1
            at_rest = False
        p_acc = meas["p_acc"]
        if static_on:
            on_target = abs(p_acc - p_stat) < self.dead_band
            if on_target and at_rest:
                theta_acc = 90.0
            else:
                theta_acc = 180.0
        else:
            theta_acc = 0.0

        # pump loop: proportional flow demand with leak-cancel feedforward
        if static_on:
            err = p_stat - p_acc
            if err > self.dead_band:
                q_d = self.kp_pump * err
                omega_cmd = pump_speed_cmd_rad_s(self.cfg.pump, q_d, p_acc)
            elif err < -self.dead_band:
                omega_cmd = 0.0
            else:
                omega_cmd = pump_speed_cmd_rad_s(self.cfg.pump, 0.0, p_acc)
        else:
            omega_cmd = 0.0

        # motor current: force feedforward, static relief, friction comp
        if not demand and release == 0.0:
            i_cmd = 0.0
        else:
            force = p_dyn * self.area
            if static_on:
                force -= p_acc * self.area_rod
            if self.friction_comp:
                force += friction_pressure_pa(
                    self.cfg.friction, meas["i_m"], meas["v_l"]) * self.area_rod
            i_cmd = force / self.k_force
            if i_cmd > self.i_peak:
                i_cmd = self.i_peak
            elif i_cmd < -self.i_peak:
                i_cmd = -self.i_peak

        return TickOutput(i_cmd, omega_cmd,
                          (theta_legs[0], theta_legs[1], theta_acc),
                          p_dyn, p_stat, clamped)


# ---------------------------------------------------------------------------
# reference transforms and valve schedules
# ---------------------------------------------------------------------------

def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """[start, stop) index pairs of the true runs in a boolean vector."""
    diff = np.diff(mask.astype(np.int8), prepend=0, append=0)
    starts = np.flatnonzero(diff == 1)
    stops = np.flatnonzero(diff == -1)
    return list(zip(starts, stops))


def transfer_trailing_leg(f1: np.ndarray, f2: np.ndarray,
                          eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Hand each double-support load to the freshly landed leg.

    During every overlap of the two reference contacts, the trailing leg's
    share is added to the leading (most recently landed) leg and the
    trailing reference is zeroed, so only one leg stays connected.
    """
    f1 = f1.copy()
    f2 = f2.copy()
    c1, c2 = f1 > eps, f2 > eps
    for start, stop in _runs(c1 & c2):
        if start == 0:
            continue   # partial overlap at the boundary: leave as-is
        lead_is_1 = not c1[start - 1]
        src, dst = (f2, f1) if lead_is_1 else (f1, f2)
        dst[start:stop] += src[start:stop]
        src[start:stop] = 0.0
    return f1, f2


def build_valve_commands(f1: np.ndarray, f2: np.ndarray, eps: float,
                         lead_ticks: int) -> tuple[np.ndarray, np.ndarray]:
    """Angle commands (0 tank / 180 supply) from the reference forces.

    Connect edges are advanced by the schedule lead so the spool has
    crossed the metering zone before the leg loads.  Disconnect edges
    stay at the reference crossing: sealing early would dump a line that
    is still carrying load.
    """
    cmds = []
    for f in (f1, f2):
        want = f > eps
        if lead_ticks > 0:
            early = np.concatenate([want[lead_ticks:],
                                    np.repeat(want[-1], lead_ticks)])
            want = want | early
        cmds.append(want.astype(float) * 180.0)
    return cmds[0], cmds[1]


def release_windows(theta_cmd: np.ndarray, pre_ticks: int,
                    post_ticks: int, rise_ticks: int,
                    fall_ticks: int = 0) -> np.ndarray:
    """Release weight (0..1) bracketing every supply->tank command edge.

    At weight 1 the controller drops the dynamic pressure reference to
    the release floor, so the line about to be vented holds no charge
    when its spool seals.  The weight ramps in over ``fall_ticks`` and
    back out over ``rise_ticks`` instead of stepping: an instant swing of
    the demand yanks the drive hard enough to ring the transmission and
    pop cavities open around the circuit.
    """
    w = np.zeros(theta_cmd.shape)
    n = len(w)
    falls = np.flatnonzero(np.diff(theta_cmd) < 0.0) + 1
    for k in falls:
        w[max(0, k - pre_ticks):min(n, k + post_ticks)] = 1.0
        for j in range(fall_ticks):
            kk = k - pre_ticks - fall_ticks + j
            if kk < 0:
                continue
            w[kk] = max(w[kk], (j + 1.0) / fall_ticks)
        for j in range(rise_ticks):
            kk = k + post_ticks + j
            if kk >= n:
                break
            w[kk] = max(w[kk], 1.0 - (j + 1.0) / rise_ticks)
    return w


def schedule_for_policy(f1: np.ndarray, f2: np.ndarray, policy: str,
                        cfg: BenchConfig,
                        release_pre_s: float = 0.008,
                        release_post_s: float = 0.032,
                        release_rise_s: float = 0.050,
                        release_fall_s: float = 0.0):
    """(f1, f2, theta1_cmd, theta2_cmd, release_weight) for a support policy.

    Policies: ``both`` keeps both legs connected through double support;
    ``leading`` transfers the load to the freshly landed leg and
    disconnects the other immediately; ``release`` is ``both`` plus a
    zero-pressure window around every disconnection.  The window holds
    until the closing spool has sealed and then ramps support back.
    """
    if policy not in ("both", "leading", "release"):
        raise ValueError(f"unknown support policy {policy!r}")
    eps = cfg.control.contact_ref_eps
    tick = 1.0 / cfg.control.rate_hz
    lead_ticks = round(cfg.control.valve_lead_s / tick)
    if policy == "leading":
        f1, f2 = transfer_trailing_leg(f1, f2, eps)
    th1, th2 = build_valve_commands(f1, f2, eps, lead_ticks)
    if policy == "release":
        pre = round(release_pre_s / tick)
        post = round(release_post_s / tick)
        rise = round(release_rise_s / tick)
        fall = round(release_fall_s / tick)
        mask = np.maximum(release_windows(th1, pre, post, rise, fall),
                          release_windows(th2, pre, post, rise, fall))
    else:
        mask = np.zeros(th1.shape)
    return f1, f2, th1, th2, mask

"""Bench maneuvers run closed loop.

Each scenario builds per-leg force references at the controller rate,
steps the plant at the integration substep, and returns a
:class:`~exohydro.sim.result.SimResult` with per-tick traces, the energy
ledger, and scenario-specific summary figures.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..config import BenchConfig, apply_override, default_config
from ..hydraulics import accumulator_liquid_at_pressure
from ..profiles import default_scenario
from .controller import ForceController, schedule_for_policy
from .plant import InitialState, Plant
from .result import SimResult

_COLUMNS = (
    "y", "v_y", "x_l", "v_l", "x_f1", "x_f2",
    "p_sup", "p_rod", "p_acc", "v_acc_ml", "p_l1", "p_l2", "q_l1", "q_l2",
    "i_m", "i_cmd", "omega_p", "omega_cmd", "th1", "th2", "th_acc",
    "p_dyn", "p_stat", "f1_ref", "f2_ref", "n1", "n2",
    "f_hand", "mass", "clamped",
)


class _Session:
    """Plant + controller stepped together, with per-tick recording."""

    def __init__(self, cfg: BenchConfig, plant: Plant, ctrl: ForceController,
                 n_ticks: int):
        self.cfg = cfg
        self.plant = plant
        self.ctrl = ctrl
        self.rate = cfg.control.rate_hz
        self.sub = max(1, round(1.0 / (cfg.control.rate_hz * cfg.sim.dt_s)))
        self.cols = {name: np.zeros(n_ticks) for name in _COLUMNS}
        self.cap = n_ticks
        self.k = 0
        self.events: list[tuple[float, str]] = []
        plant.start_ledger()

    @property
    def t_now(self) -> float:
        return self.k / self.rate

    def set_mass(self, mass_kg: float) -> None:
        """Payload change: reaches the physics and the pressure targets."""
        self.ctrl.mass = mass_kg
        self.plant.set_cart_mass(mass_kg)

    def event(self, label: str) -> None:
        self.events.append((self.t_now, label))

    def tick(self, f1: float, f2: float, f_stat: float,
             theta_legs: tuple[float, float], release: float = 0.0,
             f_hand: float = 0.0,
             stance: tuple[bool, bool] = (True, True)) -> dict:
        plant = self.plant
        plant.set_stance(*stance)
        meas = plant.measured()
        out = self.ctrl.tick(meas, f1, f2, f_stat, theta_legs, release=release)
        for _ in range(self.sub):
            plant.step(out.i_cmd_a, out.omega_cmd_rad_s, out.theta_cmd_deg,
                       f_hand)
        k = self.k
        c = self.cols
        c["y"][k] = plant.y
        c["v_y"][k] = plant.v_y
        c["x_l"][k] = plant.x_l
        c["v_l"][k] = plant.v_l
        c["x_f1"][k] = plant.x_f[0]
        c["x_f2"][k] = plant.x_f[1]
        c["p_sup"][k] = plant.p_sup
        c["p_rod"][k] = plant.p_rod
        c["p_acc"][k] = plant.p_acc
        c["v_acc_ml"][k] = plant.v_acc * 1e6
        c["p_l1"][k] = plant.p_line[0]
        c["p_l2"][k] = plant.p_line[1]
        c["q_l1"][k] = plant.q_line[0]
        c["q_l2"][k] = plant.q_line[1]
        c["i_m"][k] = plant.i_m
        c["i_cmd"][k] = out.i_cmd_a
        c["omega_p"][k] = plant.omega_p
        c["omega_cmd"][k] = out.omega_cmd_rad_s
        c["th1"][k] = plant.theta[0]
        c["th2"][k] = plant.theta[1]
        c["th_acc"][k] = plant.theta[2]
        c["p_dyn"][k] = out.p_dyn_pa
        c["p_stat"][k] = out.p_stat_pa
        c["f1_ref"][k] = f1
        c["f2_ref"][k] = f2
        c["n1"][k] = plant.contact_n[0]
        c["n2"][k] = plant.contact_n[1]
        c["f_hand"][k] = f_hand
        c["mass"][k] = plant.cart_mass
        c["clamped"][k] = 1.0 if out.clamped else 0.0
        self.k = k + 1
        return meas

    def result(self, scenario: str, params: dict | None = None,
               summary: dict | None = None) -> SimResult:
        n = self.k
        data = {"t": np.arange(n) / self.rate}
        for name in _COLUMNS:
            data[name] = self.cols[name][:n]
        residual, throughput = self.plant.closure()
        out_summary = {
            "closure_residual_j": residual,
            "closure_throughput_j": throughput,
            "closure_frac": abs(residual) / max(throughput, 1e-9),
        }
        out_summary.update(summary or {})
        flags = dict(self.plant.flags)
        flags["clamp_events"] = self.ctrl.clamp_events
        meta = {"scenario": scenario, "rate_hz": self.rate,
                "dt_s": self.cfg.sim.dt_s}
        meta.update(params or {})
        return SimResult(data=data, ledger=dataclasses.asdict(self.plant.ledger),
                         flags=flags, events=self.events, meta=meta,
                         summary=out_summary)


def _run_schedule(ses: _Session, f1: np.ndarray, f2: np.ndarray,
                  f_stat: float, th1: np.ndarray, th2: np.ndarray,
                  release: np.ndarray | None = None,
                  hand_fn=None, mass: np.ndarray | None = None,
                  stance: tuple[np.ndarray, np.ndarray] | None = None) -> None:
    """Drive a session through precomputed reference timelines."""
    n = f1.shape[0]
    for k in range(n):
        if mass is not None and mass[k] != ses.plant.cart_mass:
            ses.set_mass(float(mass[k]))
        if hand_fn is not None:
            f_hand = hand_fn(k, ses.plant)
        else:
            f_hand = 0.0
        rel = float(release[k]) if release is not None else 0.0
        st = (bool(stance[0][k]), bool(stance[1][k])) if stance is not None \
            else (True, True)
        ses.tick(float(f1[k]), float(f2[k]), f_stat,
                 (float(th1[k]), float(th2[k])), release=rel, f_hand=f_hand,
                 stance=st)


# ---------------------------------------------------------------------------
# standing / squat with payload changes
# ---------------------------------------------------------------------------

def squat_varying_payload(cfg: BenchConfig | None = None, *,
                          payloads_kg: tuple = (20.0, 0.0, 10.0),
                          segment_s: float = 14.0,
                          press_depth_m: float = 0.05,
                          press_hz: float = 1.0) -> SimResult:
    """Quiet standing under changing payload, with hand press-downs.

    The legs stay connected and the force references stay zero: support
    comes entirely from the balancing pressure on the rod side.  Each
    segment re-targets that pressure for its payload; mid-segment a hand
    force presses the cart through three cosine dips to exercise the
    passive compliance (the hold valve must open for the backdrive and
    re-block at rest).

    Note the unloaded segment asks for a balance pressure below the gas
    precharge, which the accumulator cannot reach: the cart parks against
    the top endstops on the surplus.  That is the hardware's honest floor,
    kept here because it exercises the empty-accumulator guard.
    """
    cfg = cfg or default_config()
    rate = cfg.control.rate_hz
    g = cfg.cart.gravity_m_s2
    base_m = cfg.cart.mass_kg
    f_stat = 0.5 * g                      # per-leg share of body weight

    n_seg = round(segment_s * rate)
    n = len(payloads_kg) * n_seg
    mass = np.concatenate([np.full(n_seg, base_m + p) for p in payloads_kg])
    zeros = np.zeros(n)
    th_on = np.full(n, 180.0)

    p_stat0 = f_stat * mass[0] / (cfg.control.knee_ratio
                                  * cfg.cylinder.area_rod_m2)
    acc0 = accumulator_liquid_at_pressure(cfg.accumulator, p_stat0)
    init = InitialState(x_leader_m=0.10, x_followers_m=(0.05, 0.05),
                        acc_liquid_ml=acc0, theta_deg=(180.0, 180.0, 180.0))
    plant = Plant(cfg, init, cart_mass_kg=float(mass[0]))
    ctrl = ForceController(cfg, float(mass[0]))
    ses = _Session(cfg, plant, ctrl, n)

    press_s = 3.0 / press_hz
    windows = [(segment_s * i + 6.0, segment_s * i + 6.0 + press_s)
               for i in range(len(payloads_kg))]
    kp_h, kd_h = 4000.0, 300.0
    state = {"idx": -1, "y0": 0.0}

    def hand_fn(k: int, plant: Plant) -> float:
        t = k / rate
        for wi, (a, b) in enumerate(windows):
            if a <= t < b:
                if state["idx"] != wi:
                    state["idx"] = wi
                    state["y0"] = plant.y
                    ses.event(f"press segment {wi + 1}")
                tau = t - a
                dip = 0.5 * (1.0 - math.cos(2.0 * math.pi * press_hz * tau))
                y_ref = state["y0"] - press_depth_m * dip
                return kp_h * (y_ref - plant.y) - kd_h * plant.v_y
        return 0.0

    for i, p in enumerate(payloads_kg):
        ses.event(f"payload {p:g} kg")
        a, b = i * n_seg, (i + 1) * n_seg
        _run_schedule(ses, zeros[a:b], zeros[a:b], f_stat,
                      th_on[a:b], th_on[a:b], hand_fn=lambda k, pl, off=a:
                      hand_fn(k + off, pl), mass=mass[a:b])

    # settled balance pressure over the last 2 s of each segment
    p_acc = ses.cols["p_acc"][:ses.k]
    tail = round(2.0 * rate)
    settled = [float(p_acc[(i + 1) * n_seg - tail:(i + 1) * n_seg].mean())
               for i in range(len(payloads_kg))]
    targets = [f_stat * (base_m + p) / (cfg.control.knee_ratio
                                        * cfg.cylinder.area_rod_m2)
               for p in payloads_kg]
    y = ses.cols["y"][:ses.k]
    w0 = (round(windows[0][0] * rate), round(windows[0][1] * rate))
    return ses.result("squat", {"payloads_kg": list(payloads_kg)}, {
        "p_acc_settled_pa": settled,
        "p_stat_targets_pa": targets,
        "press_excursion_m": float(y[w0[0]] - y[w0[0]:w0[1]].min()),
    })


# ---------------------------------------------------------------------------
# vertical jump from the stored charge
# ---------------------------------------------------------------------------

def jump(cfg: BenchConfig | None = None, *, f_launch: float = 24.0,
         charge_margin_s: float = 0.3, max_s: float = 16.0) -> SimResult:
    """Charge crouched, release into a jump, cushion the landing.

    The launch energy comes from the accumulator: the balance target is
    sized so the rod-side charge alone produces the launch pressure on
    the supply side, and the motor only covers friction and the sag as
    the charge drains.  Flight is detected from the contact forces; the
    legs reconnect on a ballistic lead before touchdown and the same
    references cushion the landing.  Afterwards the rod side is vented
    and the motor alone carries the stand.
    """
    cfg = cfg or default_config()
    rate = cfg.control.rate_hz
    g = cfg.cart.gravity_m_s2
    m = cfg.cart.mass_kg
    ctl = cfg.control
    z_top = cfg.cylinder.stroke_follower_m / ctl.knee_ratio
    lead_s = ctl.valve_lead_s

    init = InitialState(x_leader_m=0.02, x_followers_m=(0.0, 0.0),
                        acc_liquid_ml=0.0, theta_deg=(0.0, 0.0, 180.0))
    plant = Plant(cfg, init)
    ctrl = ForceController(cfg, m)
    ses = _Session(cfg, plant, ctrl, round(max_s * rate))
    p_stat_tgt = f_launch * m / (ctl.knee_ratio * cfg.cylinder.area_rod_m2)

    phase = "charge"
    on_target_ticks = 0
    need_ticks = round(charge_margin_s * rate)
    stand_left = round(1.2 * rate)
    ses.event("charge")
    while ses.k < ses.cap and phase != "done":
        meas = plant.measured()
        if phase == "charge":
            if abs(meas["p_acc"] - p_stat_tgt) < ctl.pump_dead_band_pa:
                on_target_ticks += 1
            else:
                on_target_ticks = 0
            if on_target_ticks >= need_ticks:
                phase = "launch"
                ses.event("launch")
            ses.tick(0.0, 0.0, f_launch, (0.0, 0.0))
        elif phase == "launch":
            airborne = (meas["n1"] + meas["n2"] == 0.0
                        and meas["v_y"] > 0.2)
            if airborne:
                phase = "aerial"
                ses.event("liftoff")
            ses.tick(f_launch, f_launch, f_launch, (180.0, 180.0))
        elif phase == "aerial":
            v, h = meas["v_y"], meas["y"]
            drop = 2.0 * g * max(h - z_top, 0.0)
            t_rem = (v + math.sqrt(v * v + drop)) / g
            legs = (180.0, 180.0) if t_rem <= lead_s else (0.0, 0.0)
            if meas["n1"] + meas["n2"] > 0.0 and meas["v_y"] < 0.0:
                phase = "land"
                ses.event("touchdown")
                ses.tick(f_launch, f_launch, f_launch, (180.0, 180.0))
            else:
                ses.tick(0.0, 0.0, f_launch, legs)
        elif phase == "land":
            if meas["v_y"] > -0.05:
                phase = "stand"
                ses.event("stand")
            ses.tick(f_launch, f_launch, f_launch, (180.0, 180.0))
        else:  # stand: rod side vented, motor-only support
            ses.tick(0.5 * g, 0.5 * g, 0.0, (180.0, 180.0))
            stand_left -= 1
            if stand_left <= 0:
                phase = "done"

    k = ses.k
    y = ses.cols["y"][:k]
    v_y = ses.cols["v_y"][:k]
    n_tot = ses.cols["n1"][:k] + ses.cols["n2"][:k]
    i_m = ses.cols["i_m"][:k]
    v_l = ses.cols["v_l"][:k]
    th1 = ses.cols["th1"][:k]
    r_wind = cfg.motor.winding_resistance_ohm
    k_force = cfg.motor.force_per_amp()

    aerial = n_tot == 0.0
    apex_m = float(y.max() - z_top)
    leg_power = n_tot * v_y
    motor_power = np.abs(k_force * i_m * v_l) + r_wind * i_m * i_m
    tank_frac = float((th1[aerial] < 80.0).mean()) if aerial.any() else 0.0
    summary = {
        "apex_m": apex_m,
        "liftoff_speed_m_s": float(v_y[aerial].max()) if aerial.any() else 0.0,
        "aerial_s": float(aerial.sum() / rate),
        "peak_leg_power_w": float(leg_power.max()),
        "peak_motor_power_w": float(motor_power.max()),
        "power_ratio": float(leg_power.max() / max(motor_power.max(), 1e-9)),
        "tank_fraction_aerial": tank_frac,
    }
    return ses.result("jump", {"f_launch": f_launch}, summary)


# ---------------------------------------------------------------------------
# gait tracking
# ---------------------------------------------------------------------------

def walk_track(cfg: BenchConfig | None = None, *, policy: str = "both",
               n_cycles: int = 12, skip_cycles: int = 2,
               f_stat: float = 5.5, precharge_pa: float = 0.45e6) -> SimResult:
    """Walking support on the isometric bench with a leg-valve policy.

    The frame is held (as for running) so the per-step hydraulic loss is
    isolated from vertical gait dynamics; legs still load and unload with
    the gait, and a leg whose reference is zero swings free of the
    ground.  The summary reports the secular leader drift per step (the
    stroke consumed replacing fluid vented at each disconnection)
    measured between same-phase points after the start-up cycles, plus
    the support tracking error over the same span.

    The balancing share is sized so the drive can null the manifold
    during pressure-release windows (p_stat * A_rod within the current
    clamp's force), with the gas precharge lowered to keep the
    accumulator in its working range at that pressure.
    """
    cfg = (cfg or default_config()).copy()
    apply_override(cfg, "accumulator.p_a0_pa", precharge_pa)
    rate = cfg.control.rate_hz
    scen = default_scenario("walk", dt=1.0 / rate)
    per = scen.n_samples
    f1 = np.tile(scen.legs[0], n_cycles)
    f2 = np.tile(scen.legs[1], n_cycles)
    # ground contact follows the gait itself (force on a leg implies its
    # foot is down), independent of how the valve policy reshapes the refs
    stance = (f1 > cfg.control.contact_ref_eps,
              f2 > cfg.control.contact_ref_eps)
    f1, f2, th1, th2, release = schedule_for_policy(f1, f2, policy, cfg)

    m = cfg.cart.mass_kg
    g = cfg.cart.gravity_m_s2
    p_stat = f_stat * m / (cfg.control.knee_ratio * cfg.cylinder.area_rod_m2)
    init = InitialState(
        x_leader_m=0.04, x_followers_m=(0.055, 0.055),
        acc_liquid_ml=accumulator_liquid_at_pressure(cfg.accumulator, p_stat),
        theta_deg=(float(th1[0]), float(th2[0]), 180.0))
    plant = Plant(cfg, init, cart_frozen=True)
    ctrl = ForceController(cfg, m)
    ses = _Session(cfg, plant, ctrl, f1.shape[0])
    _run_schedule(ses, f1, f2, f_stat, th1, th2, release, stance=stance)

    a, b = skip_cycles * per, n_cycles * per
    steps = 2 * (n_cycles - skip_cycles)
    x_l = ses.cols["x_l"][:ses.k]
    drift = (x_l[b - 1] - x_l[a - 1]) / steps
    n1 = ses.cols["n1"][a:b]
    n2 = ses.cols["n2"][a:b]
    err = (n1 + n2) - (f1[a:b] + f2[a:b]) * m
    return ses.result("walk", {"policy": policy, "n_cycles": n_cycles}, {
        "stroke_loss_mm_per_step": float(drift * 1e3),
        "support_rms_err_frac": float(np.sqrt((err ** 2).mean()) / (m * g)),
        "steps_measured": steps,
    })


def run_track(cfg: BenchConfig | None = None, *, n_cycles: int = 15,
              skip_cycles: int = 3, level: float = 0.6,
              mass_ref_kg: float = 22.26, f_stat: float = 8.5) -> SimResult:
    """Running support at reduced amplitude on the frozen cart.

    Full-amplitude running peaks beyond the transmission rating, so the
    references are scaled and the controller mass is raised until the
    shared-pressure peak lands exactly on the rating: the clamp flag must
    fire only at the peaks.  The cart is frozen (isometric force bench)
    because the scaled references do not integrate to the cart's weight.
    """
    cfg = cfg or default_config()
    rate = cfg.control.rate_hz
    scen = default_scenario("run", dt=1.0 / rate)
    per = scen.n_samples
    f1 = np.tile(scen.legs[0] * level, n_cycles)
    f2 = np.tile(scen.legs[1] * level, n_cycles)
    stance = (f1 > cfg.control.contact_ref_eps,
              f2 > cfg.control.contact_ref_eps)
    f1, f2, th1, th2, release = schedule_for_policy(f1, f2, "both", cfg)

    g = cfg.cart.gravity_m_s2
    p_stat = f_stat * mass_ref_kg / (cfg.control.knee_ratio
                                     * cfg.cylinder.area_rod_m2)
    init = InitialState(
        x_leader_m=0.04, x_followers_m=(0.04, 0.04),
        acc_liquid_ml=accumulator_liquid_at_pressure(cfg.accumulator, p_stat),
        theta_deg=(float(th1[0]), float(th2[0]), 180.0))
    plant = Plant(cfg, init, cart_frozen=True)
    ctrl = ForceController(cfg, mass_ref_kg)
    ses = _Session(cfg, plant, ctrl, f1.shape[0])
    _run_schedule(ses, f1, f2, f_stat, th1, th2, release, stance=stance)

    a, b = skip_cycles * per, n_cycles * per
    n1 = ses.cols["n1"][a:b]
    n2 = ses.cols["n2"][a:b]
    err = (n1 + n2) - (f1[a:b] + f2[a:b]) * mass_ref_kg
    p_dyn = ses.cols["p_dyn"][a:b]
    return ses.result("run", {"level": level, "n_cycles": n_cycles}, {
        "support_rms_err_frac": float(np.sqrt((err ** 2).mean())
                                      / (mass_ref_kg * g)),
        "p_dyn_peak_pa": float(p_dyn.max()),
        "stroke_loss_mm_per_step": float(
            (ses.cols["x_l"][b - 1] - ses.cols["x_l"][a - 1]) * 1e3
            / (2 * (n_cycles - skip_cycles))),
    })


# ---------------------------------------------------------------------------
# actuation-variant energy comparison
# ---------------------------------------------------------------------------

ENERGY_VARIANTS = ("A", "B", "C", "D")


def energy_comparison(cfg: BenchConfig | None = None, *, variant: str = "A",
                      n_cycles: int = 8, skip_cycles: int = 2,
                      f_stat_on: float = 8.2, knee_ratio: float = 0.34,
                      precharge_pa: float = 0.48e6) -> SimResult:
    """Walking cost of one actuation variant on the isometric bench.

    Variants: ``A`` routes both legs' load through one line with no
    balancing; ``B`` is the same routing with the balancing charge
    relieving the static share; ``C`` shares the load across both legs'
    lines with no balancing; ``D`` is sharing plus balancing.  The cart
    is frozen so all four see identical reference kinematics regardless
    of whether their support tracking could carry a free cart.
    """
    if variant not in ENERGY_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    base = (cfg or default_config()).copy()
    apply_override(base, "control.knee_ratio", knee_ratio)
    apply_override(base, "accumulator.p_a0_pa", precharge_pa)
    rate = base.control.rate_hz
    scen = default_scenario("walk", dt=1.0 / rate)
    per = scen.n_samples
    f1 = np.tile(scen.legs[0], n_cycles)
    f2 = np.tile(scen.legs[1], n_cycles)
    if variant in ("A", "B"):
        f1, f2 = f1 + f2, np.zeros_like(f2)
    f_stat = f_stat_on if variant in ("B", "D") else 0.0
    f1, f2, th1, th2, release = schedule_for_policy(f1, f2, "both", base)

    m = base.cart.mass_kg
    if f_stat > 0.0:
        p_stat = f_stat * m / (knee_ratio * base.cylinder.area_rod_m2)
        acc0 = accumulator_liquid_at_pressure(base.accumulator, p_stat)
        th_acc0 = 180.0
    else:
        acc0, th_acc0 = 0.0, 0.0
    init = InitialState(x_leader_m=0.06, x_followers_m=(0.04, 0.04),
                        acc_liquid_ml=acc0,
                        theta_deg=(float(th1[0]), float(th2[0]), th_acc0))
    plant = Plant(base, init, cart_frozen=True)
    ctrl = ForceController(base, m)
    ses = _Session(base, plant, ctrl, f1.shape[0])
    _run_schedule(ses, f1, f2, f_stat, th1, th2, release)

    a, b = skip_cycles * per, n_cycles * per
    i_m = ses.cols["i_m"][a:b]
    v_l = ses.cols["v_l"][a:b]
    r_wind = base.motor.winding_resistance_ohm
    k_force = base.motor.force_per_amp()
    p_joule = float(r_wind * (i_m ** 2).mean())
    p_mech = float(k_force * (i_m * v_l).mean())
    return ses.result("energy", {"variant": variant, "n_cycles": n_cycles}, {
        "variant": variant,
        "i_rms_a": float(np.sqrt((i_m ** 2).mean())),
        "p_joule_w": p_joule,
        "p_mech_w": p_mech,
        "p_elec_w": p_joule + p_mech,
    })


def compare_energy(cfg: BenchConfig | None = None,
                   **kwargs) -> dict[str, SimResult]:
    """Run all four actuation variants and return their results by name."""
    return {v: energy_comparison(cfg, variant=v, **kwargs)
            for v in ENERGY_VARIANTS}


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _registry() -> dict:
    from . import sweeps
    return {
        "squat": squat_varying_payload,
        "jump": jump,
        "walk": walk_track,
        "run": run_track,
        "energy": energy_comparison,
        "charge_step": sweeps.charge_step,
        "switch_sweep": sweeps.switch_sweep_fixed,
        "switch_sweep_variable": sweeps.switch_sweep_variable,
        "switch_moving": sweeps.switch_moving,
    }


SCENARIOS = tuple(sorted(_registry()))


def run_scenario(name: str, cfg: BenchConfig | None = None,
                 **params) -> SimResult:
    """Run a registered scenario by name."""
    reg = _registry()
    if name not in reg:
        raise ValueError(f"unknown scenario {name!r}; expected one of "
                         f"{', '.join(SCENARIOS)}")
    return reg[name](cfg, **params)

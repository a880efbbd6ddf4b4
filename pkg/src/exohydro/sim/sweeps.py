"""Open-loop experiments: pump-loop step response and valve-switching
transients.

These run fixed command sequences so the measured behaviour belongs to
the hydraulics (and the pump loop), not to the force controller.
"""

from __future__ import annotations

import numpy as np

from ..config import BenchConfig, apply_override, default_config
from ..hydraulics import accumulator_liquid_at_pressure, pump_speed_cmd_rad_s
from .plant import InitialState, Plant
from .result import SimResult


# ---------------------------------------------------------------------------
# pump-loop step response
# ---------------------------------------------------------------------------

def charge_step(cfg: BenchConfig | None = None, *,
                p_target_pa: float = 2.0e6, duration_s: float = 40.0,
                dt_s: float = 1e-3) -> SimResult:
    """Step the balance-pressure target with the legs parked.

    With no rod or line flow the loop reduces to the pump drive and the
    gas charge, so it integrates comfortably at the controller rate.  The
    result carries its own mini energy ledger (pump work in, leak loss,
    gas energy stored).
    """
    cfg = cfg or default_config()
    acc, pump, drive, ctl = cfg.accumulator, cfg.pump, cfg.pump_drive, cfg.control
    kp = ctl.kp_flow_ml_s_per_bar / 1e5          # [mL/s/Pa]
    band = ctl.pump_dead_band_pa
    thr_ml = cfg.sim.n_switch_flow_ml_s * dt_s   # fast/slow boundary [mL]
    hys = cfg.sim.n_switch_hysteresis

    n = round(duration_s / dt_s)
    t = np.arange(n) * dt_s
    rec = {k: np.zeros(n) for k in
           ("p_acc", "v_acc_ml", "omega_p", "omega_cmd", "q_ml_s")}

    p = acc.p_a0_pa
    v_liq = 0.0          # [mL]
    omega = 0.0
    fast = False
    pump_work = leak_loss = gas_stored = 0.0

    for k in range(n):
        err = p_target_pa - p
        if err > band:
            w_cmd = pump_speed_cmd_rad_s(pump, kp * err, p)
        elif err < -band:
            w_cmd = 0.0
        else:
            w_cmd = pump_speed_cmd_rad_s(pump, 0.0, p)
        w_cmd = min(max(w_cmd, 0.0), drive.speed_max_rad_s)
        omega += (w_cmd - omega) * (dt_s / drive.speed_tau_s)
        q = pump.v_displ_ml_per_rad * omega - pump.alpha_ml_s_pa * p
        dv = q * dt_s
        if fast:
            if abs(dv) < thr_ml * hys:
                fast = False
        elif abs(dv) > thr_ml:
            fast = True
        n_eff = 1.4 if fast else acc.n_poly
        v_gas = acc.v_a0_ml - v_liq
        p_mid = p * (1.0 + 0.5 * n_eff * dv / v_gas)
        p += n_eff * p / v_gas * dv
        v_liq += dv
        if v_liq < 0.0:
            v_liq = 0.0
            p = acc.p_a0_pa
        pump_work += pump.v_displ_ml_per_rad * omega * p * dt_s * 1e-6
        leak_loss += pump.alpha_ml_s_pa * p * p * dt_s * 1e-6
        gas_stored += p_mid * dv * 1e-6
        rec["p_acc"][k] = p
        rec["v_acc_ml"][k] = v_liq
        rec["omega_p"][k] = omega
        rec["omega_cmd"][k] = w_cmd
        rec["q_ml_s"][k] = q

    p_tr = rec["p_acc"]
    tail = p_tr[round(0.9 * n):]
    ss_err = abs(float(tail.mean()) - p_target_pa) / p_target_pa
    step = p_target_pa - acc.p_a0_pa
    overshoot = max(0.0, float(p_tr.max()) - p_target_pa) / step
    out = np.flatnonzero(np.abs(p_tr - p_target_pa) > 0.02 * p_target_pa)
    settle_s = float(t[out[-1]] + dt_s) if out.size else 0.0
    residual = pump_work - leak_loss - gas_stored
    ledger = {"pump_mech": pump_work, "pump_leak": leak_loss,
              "gas_stored": gas_stored}
    return SimResult(
        data={"t": t, **rec}, ledger=ledger, flags={},
        events=[(0.0, f"target {p_target_pa:.3g} Pa")],
        meta={"scenario": "charge_step", "dt_s": dt_s,
              "p_target_pa": p_target_pa},
        summary={"ss_err_frac": ss_err, "overshoot_frac": overshoot,
                 "settle_s": settle_s,
                 "closure_residual_j": residual,
                 "closure_throughput_j": pump_work,
                 "closure_frac": abs(residual) / max(pump_work, 1e-9)})


# ---------------------------------------------------------------------------
# valve switching against a blocked output
# ---------------------------------------------------------------------------

_SWEEP_COLS = ("run", "p_l1", "q_l1", "th1", "p_sup", "p_acc", "x_l")


def _merge_runs(runs: list[dict], scenario: str, meta: dict,
                summary: dict) -> SimResult:
    data = {"t": np.concatenate([r["t"] for r in runs])}
    for name in _SWEEP_COLS:
        data[name] = np.concatenate([r[name] for r in runs])
    ledger: dict = {}
    for r in runs:
        for key, val in r["ledger"].items():
            ledger[key] = ledger.get(key, 0.0) + val
    flags: dict = {}
    for r in runs:
        for key, val in r["flags"].items():
            flags[key] = flags.get(key, 0) + val
    summary = dict(summary)
    summary["closure_frac_max"] = max(r["closure_frac"] for r in runs)
    events = [(float(i), r["label"]) for i, r in enumerate(runs)]
    return SimResult(data=data, ledger=ledger, flags=flags, events=events,
                     meta=meta, summary=summary)


def _blocked_switch_run(cfg: BenchConfig, p_sup_pa: float, settle_s: float,
                        window_s: float, rate_fn=None) -> dict:
    """Connect a vented line to the charged supply; record the transient.

    The leader is free: with the output blocked it floats in static
    balance, so the supply settles at ``p_sup_pa`` when the accumulator
    carries the matching rod pressure.
    """
    cyl = cfg.cylinder
    p_acc0 = p_sup_pa * cyl.area_m2 / cyl.area_rod_m2
    init = InitialState(
        x_leader_m=0.10, x_followers_m=(0.04, 0.04),
        acc_liquid_ml=accumulator_liquid_at_pressure(cfg.accumulator, p_acc0),
        theta_deg=(0.0, 0.0, 180.0))
    plant = Plant(cfg, init, followers_locked=True, cart_frozen=True)
    if rate_fn is not None:
        plant.valve_rate_fn = rate_fn
    plant.start_ledger()

    rate = cfg.control.rate_hz
    sub = max(1, round(1.0 / (rate * cfg.sim.dt_s)))
    n = round((settle_s + window_s) * rate)
    k_sw = round(settle_s * rate)
    cols = {name: np.zeros(n) for name in _SWEEP_COLS}
    t = np.arange(n) / rate - settle_s
    for k in range(n):
        th_cmd = 180.0 if k >= k_sw else 0.0
        omega = pump_speed_cmd_rad_s(cfg.pump, 0.0, plant.p_acc)
        for _ in range(sub):
            plant.step(0.0, omega, (th_cmd, 0.0, 180.0), 0.0)
        cols["p_l1"][k] = plant.p_line[0]
        cols["q_l1"][k] = plant.q_line[0]
        cols["th1"][k] = plant.theta[0]
        cols["p_sup"][k] = plant.p_sup
        cols["p_acc"][k] = plant.p_acc
        cols["x_l"][k] = plant.x_l

    p_l1 = cols["p_l1"]
    ss = float(p_l1[n - round(0.2 * window_s * rate):].mean())
    after = p_l1[k_sw:]
    overshoot = max(0.0, float(after.max()) - ss) / ss
    lo = k_sw + int(np.argmax(after >= 0.1 * ss))
    hi = k_sw + int(np.argmax(after >= 0.9 * ss))
    residual, throughput = plant.closure()
    cols["run"] = np.zeros(n)
    return {
        "t": t, **cols, "ledger": vars(plant.ledger).copy(),
        "flags": dict(plant.flags),
        "closure_frac": abs(residual) / max(throughput, 1e-9),
        "ss_pa": ss, "overshoot_frac": overshoot,
        "rise_s": (hi - lo) / rate, "label": "",
    }


def switch_sweep_fixed(cfg: BenchConfig | None = None, *,
                       speeds_deg_s: np.ndarray | None = None,
                       p_sup_pa: float = 1.5e6, settle_s: float = 0.4,
                       window_s: float = 0.9) -> SimResult:
    """Supply-connect transients across a ladder of valve slew rates.

    Slower valves open the metering ramp gradually: the charge soft-starts,
    trading a longer 10-90% rise for less ringing overshoot.
    """
    cfg = cfg or default_config()
    if speeds_deg_s is None:
        speeds_deg_s = np.geomspace(2600.0, 180.0, 10)
    runs = []
    for i, s in enumerate(speeds_deg_s):
        run_cfg = cfg.copy()
        apply_override(run_cfg, "valve.max_speed_deg_s", float(s))
        r = _blocked_switch_run(run_cfg, p_sup_pa, settle_s, window_s)
        r["run"][:] = i
        r["label"] = f"valve {s:.0f} deg/s"
        runs.append(r)
    return _merge_runs(
        runs, "switch_sweep",
        {"scenario": "switch_sweep", "p_sup_pa": p_sup_pa},
        {"speeds_deg_s": [float(s) for s in speeds_deg_s],
         "overshoot_frac": [r["overshoot_frac"] for r in runs],
         "rise_s": [r["rise_s"] for r in runs],
         "ss_pa": [r["ss_pa"] for r in runs]})


def switch_sweep_variable(cfg: BenchConfig | None = None, *,
                          slow_lo_deg: float = 65.0,
                          slow_hi_deg: float = 115.0,
                          slow_factor: float = 10.0,
                          p_sup_pa: float = 1.5e6, settle_s: float = 0.4,
                          window_s: float = 0.9) -> SimResult:
    """One switch with an angle-dependent slew: slow only around the
    metering edges, full speed elsewhere."""
    cfg = cfg or default_config()
    top = cfg.valve.max_speed_deg_s

    def rate_fn(theta: float) -> float:
        return top / slow_factor if slow_lo_deg <= theta <= slow_hi_deg else top

    r = _blocked_switch_run(cfg, p_sup_pa, settle_s, window_s, rate_fn)
    r["label"] = f"variable {top:.0f}//{slow_factor:g} deg/s"
    return _merge_runs(
        [r], "switch_sweep_variable",
        {"scenario": "switch_sweep_variable", "p_sup_pa": p_sup_pa,
         "slow_band_deg": [slow_lo_deg, slow_hi_deg]},
        {"overshoot_frac": [r["overshoot_frac"]],
         "rise_s": [r["rise_s"]], "ss_pa": [r["ss_pa"]]})


# ---------------------------------------------------------------------------
# disconnecting a moving actuator
# ---------------------------------------------------------------------------

def switch_moving(cfg: BenchConfig | None = None, *,
                  speeds_m_s: tuple = (0.25, 0.5, 1.0), bypass: bool = False,
                  p_sup_pa: float = 1.5e6, valve_speed_deg_s: float = 1000.0,
                  settle_s: float = 0.15, window_s: float = 0.25) -> SimResult:
    """Disconnect a leg while its piston is still being driven.

    The follower is rate-prescribed downward (eccentric loading), so its
    line keeps pumping toward the supply while the valve transits the
    blocked span — the trapped column spikes until the tank port opens.
    With ``bypass`` the one-way relief back to the supply caps the spike
    near its cracking pressure.
    """
    cfg = cfg or default_config()
    cyl = cfg.cylinder
    ratio = cfg.control.knee_ratio
    p_acc0 = p_sup_pa * cyl.area_m2 / cyl.area_rod_m2
    rate = cfg.control.rate_hz
    sub = max(1, round(1.0 / (rate * cfg.sim.dt_s)))
    runs = []
    for i, v in enumerate(speeds_m_s):
        run_cfg = cfg.copy()
        apply_override(run_cfg, "valve.max_speed_deg_s", valve_speed_deg_s)
        init = InitialState(
            x_leader_m=0.17, x_followers_m=(0.0755, 0.04),
            acc_liquid_ml=accumulator_liquid_at_pressure(
                run_cfg.accumulator, p_acc0),
            theta_deg=(180.0, 0.0, 180.0))
        plant = Plant(run_cfg, init, followers_locked=True, cart_frozen=True,
                      check_valves=bypass)
        plant.follower_speed[0] = -ratio * v
        plant.start_ledger()

        n = round((settle_s + window_s) * rate)
        k_sw = round(settle_s * rate)
        cols = {name: np.zeros(n) for name in _SWEEP_COLS}
        t = np.arange(n) / rate - settle_s
        for k in range(n):
            th_cmd = 0.0 if k >= k_sw else 180.0
            omega = pump_speed_cmd_rad_s(run_cfg.pump, 0.0, plant.p_acc)
            for _ in range(sub):
                plant.step(0.0, omega, (th_cmd, 0.0, 180.0), 0.0)
            cols["p_l1"][k] = plant.p_line[0]
            cols["q_l1"][k] = plant.q_line[0]
            cols["th1"][k] = plant.theta[0]
            cols["p_sup"][k] = plant.p_sup
            cols["p_acc"][k] = plant.p_acc
            cols["x_l"][k] = plant.x_l

        base = float(cols["p_l1"][k_sw - 1])
        spike = float(cols["p_l1"][k_sw:].max()) - base
        residual, throughput = plant.closure()
        cols["run"] = np.full(n, float(i))
        runs.append({
            "t": t, **cols, "ledger": vars(plant.ledger).copy(),
            "flags": dict(plant.flags),
            "closure_frac": abs(residual) / max(throughput, 1e-9),
            "spike_pa": spike, "base_pa": base,
            "label": f"{v:g} m/s" + (" bypass" if bypass else ""),
        })
    return _merge_runs(
        runs, "switch_moving",
        {"scenario": "switch_moving", "bypass": bypass,
         "valve_speed_deg_s": valve_speed_deg_s},
        {"speeds_m_s": [float(v) for v in speeds_m_s],
         "spike_pa": [r["spike_pa"] for r in runs],
         "base_pa": [r["base_pa"] for r in runs]})

"""Lumped-parameter plant model of the shared-actuation test bench.

One leader cylinder (motor + ballscrew, bore feeding a supply manifold),
two follower leg cylinders behind 3-way switching valves and hose lines,
and a passive pump/accumulator unit biasing the leader's rod side through
its own 3-way valve.  A vertically guided cart rides the two legs through
unilateral contact.

Integration is semi-implicit Euler at a fixed substep: the stiff hydraulic
paths (valve orifice into a hose/line node, orifice into the nearly rigid
rod chamber) are stepped implicitly, and velocity self-damping terms are
folded in implicitly so stiff contact damping cannot blow up.  All
pressures are gauge (tank = 0); every node floors at zero pressure by
trading the deficit volume against a vapor-cavity state, which keeps fluid
energy consistent through cavitation and refill.

The energy ledger books physical inputs, dissipation and storage with the
same discrete quantities the integrator uses, so the closure residual
measures genuine discretization error rather than bookkeeping choices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..config import BenchConfig
from ..hydraulics import (
    HydraulicFault,
    accumulator_pressure,
    check_valve_flow_m3_s,
    friction_pressure_pa,
)


@dataclass
class InitialState:
    """Starting pose and charge of the bench."""

    x_leader_m: float = 0.02
    x_followers_m: tuple[float, float] = (0.076, 0.076)
    cart_height_m: float | None = None   # default: ride the longest leg
    acc_liquid_ml: float = 0.0
    theta_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)  # leg1, leg2, acc


@dataclass
class Ledger:
    """Cumulative energy bookkeeping [J].

    ``inputs()`` and ``dissipated()`` are running integrals; storage terms
    are state functions evaluated on demand.  ``gas_stored`` is the running
    liquid-side work done on the accumulator gas (its storage reference).
    ``valve_servo`` is switching-servo electrical energy; it never enters
    the hydraulic circuit and sits outside the closure sum.
    """

    motor_mech: float = 0.0
    motor_joule: float = 0.0
    pump_mech: float = 0.0
    hand: float = 0.0
    bias: float = 0.0
    friction: float = 0.0
    contact_damping: float = 0.0
    endstop: float = 0.0
    line_loss: float = 0.0
    rod_orifice: float = 0.0
    pump_leak: float = 0.0
    blocked_dump: float = 0.0
    gas_stored: float = 0.0
    valve_servo: float = 0.0

    def inputs(self) -> float:
        return self.motor_mech + self.pump_mech + self.hand + self.bias

    def dissipated(self) -> float:
        return (self.friction + self.contact_damping + self.endstop
                + self.line_loss + self.rod_orifice + self.pump_leak
                + self.blocked_dump)


class Plant:
    """Mutable bench state stepped at a fixed substep."""

    def __init__(self, cfg: BenchConfig, init: InitialState | None = None,
                 cart_mass_kg: float | None = None,
                 followers_locked: bool = False,
                 cart_frozen: bool = False,
                 check_valves: bool = False,
                 knee_ratio: float | None = None):
        self.cfg = cfg
        init = init or InitialState()
        cyl = cfg.cylinder
        self.area = cyl.area_m2
        self.area_rod = cyl.area_rod_m2
        self.stroke_l = cyl.stroke_leader_m
        self.stroke_f = cyl.stroke_follower_m
        self.ratio = knee_ratio if knee_ratio is not None else cfg.control.knee_ratio

        self.followers_locked = followers_locked
        self.follower_speed = [0.0, 0.0]   # prescribed when locked
        self.cart_frozen = cart_frozen
        self.check_valves = check_valves
        self.valve_rate_fn = None          # optional angle -> deg/s override

        # --- mechanical state ---
        self.x_l = init.x_leader_m
        self.v_l = 0.0
        self.x_f = [init.x_followers_m[0], init.x_followers_m[1]]
        self.v_f = [0.0, 0.0]
        self.cart_mass = cart_mass_kg if cart_mass_kg is not None else cfg.cart.mass_kg
        z0 = max(self.x_f) / self.ratio
        self.y = init.cart_height_m if init.cart_height_m is not None else z0
        self.v_y = 0.0

        # --- hydraulic state ---
        self.p_sup = 0.0
        self.p_rod = 0.0
        self.p_line = [0.0, 0.0]
        self.q_line = [0.0, 0.0]
        self.cav_sup = 0.0
        self.cav_rod = 0.0
        self.cav_line = [0.0, 0.0]
        self.v_acc = init.acc_liquid_ml * 1e-6          # [m3] liquid side
        self.p_acc = accumulator_pressure(cfg.accumulator, init.acc_liquid_ml)
        self.gas_fast = False

        # --- drive state ---
        self.i_m = 0.0
        self.omega_p = 0.0
        self.theta = [init.theta_deg[0], init.theta_deg[1], init.theta_deg[2]]

        self.t = 0.0
        self.ledger = Ledger()
        self.flags = {"cavitation": 0, "acc_empty": 0, "endstop": 0}
        self.contact_n = [0.0, 0.0]
        # gait contact gating: a leg in swing carries no ground force, and
        # at each touchdown the foot lands flush (per-leg ground offset
        # rebased so the landing starts at zero overlap)
        self.stance = [True, True]
        self.ground = [0.0, 0.0]
        # volume audit: per-leg draw from the supply manifold and dump to
        # tank through the leg valves (signed, m3)
        self.vol_supply = [0.0, 0.0]
        self.vol_tank = [0.0, 0.0]

        # --- precomputed constants ---
        sim, mot = cfg.sim, cfg.motor
        self.dt = sim.dt_s
        self.c_sup = sim.supply_compliance_m3_pa
        self.c_rod = sim.node_min_compliance_m3_pa
        self.c_line = cfg.line.compliance_m3_pa
        self.i_line = cfg.line.inertance_pa_s2_m3
        self.r_line = cfg.line.resistance_pa_s_m3
        self.k_quad = cfg.line.quad_pa_s2_m6
        self.k_force = mot.force_per_amp()              # [N/A]
        self.lead_rad = mot.lead_m_per_rad
        self.i_peak = mot.current_peak_a
        self.r_wind = mot.winding_resistance_ohm
        self.v_bus = mot.bus_voltage_v
        self.k_t = mot.torque_constant_nm_a
        self.tau_i = mot.current_tau_s
        self.tau_w = cfg.pump_drive.speed_tau_s
        self.w_max = cfg.pump_drive.speed_max_rad_s
        self.pump_disp = cfg.pump.v_displ_ml_per_rad * 1e-6     # [m3/rad]
        self.pump_alpha = cfg.pump.alpha_ml_s_pa * 1e-6         # [m3/s/Pa]
        self.m_leader = mot.reflected_mass_kg
        self.m_fol = cfg.cart.follower_mass_kg
        self.b_fol = cfg.cart.follower_damping_ns_m
        self.f_bias = cfg.cart.follower_bias_n
        self.g = cfg.cart.gravity_m_s2
        self.k_contact = cfg.contact.stiffness_n_m
        self.k_end = cfg.contact.endstop_n_m
        self.b_end = cfg.contact.endstop_damping_ns_m
        self.valve = cfg.valve
        self.check = cfg.check_valve
        self.fric = cfg.friction
        self.acc = cfg.accumulator
        self.n_flow_thr = sim.n_switch_flow_ml_s * 1e-6
        self.n_flow_hys = sim.n_switch_hysteresis
        self.e_switch = sim.valve_switch_energy_j
        self._set_contact_damping()
        self._e0 = None

    def _set_contact_damping(self) -> None:
        zeta = self.cfg.contact.damping_ratio
        self.b_contact = 2.0 * zeta * math.sqrt(self.k_contact * self.cart_mass)

    def set_cart_mass(self, mass_kg: float) -> None:
        if mass_kg != self.cart_mass:
            self.cart_mass = mass_kg
            self._set_contact_damping()

    # ------------------------------------------------------------------
    # energy bookkeeping

    def storage(self) -> float:
        e = 0.5 * self.m_leader * self.v_l ** 2
        e += 0.5 * self.cart_mass * self.v_y ** 2 + self.cart_mass * self.g * self.y
        e += 0.5 * self.c_sup * self.p_sup ** 2
        e += 0.5 * self.c_rod * self.p_rod ** 2
        e += self.ledger.gas_stored
        e += self._endstop_storage(self.x_l, self.stroke_l)
        for i in (0, 1):
            e += 0.5 * self.m_fol * self.v_f[i] ** 2
            e += 0.5 * self.i_line * self.q_line[i] ** 2
            e += 0.5 * self.c_line * self.p_line[i] ** 2
            e += self._endstop_storage(self.x_f[i], self.stroke_f)
            over = self.x_f[i] / self.ratio - self.y
            if over > 0.0:
                e += 0.5 * self.k_contact * over ** 2
        return e

    def _endstop_storage(self, x: float, hi: float) -> float:
        if x < 0.0:
            return 0.5 * self.k_end * x ** 2
        if x > hi:
            return 0.5 * self.k_end * (x - hi) ** 2
        return 0.0

    def start_ledger(self) -> None:
        self._e0 = self.storage()

    def closure(self) -> tuple[float, float]:
        """(residual, throughput) in joules since ``start_ledger``."""
        if self._e0 is None:
            raise RuntimeError("call start_ledger() first")
        led = self.ledger
        residual = led.inputs() - led.dissipated() - (self.storage() - self._e0)
        throughput = (abs(led.motor_mech) + led.pump_mech + abs(led.hand)
                      + abs(led.bias) + led.dissipated())
        return residual, throughput

    # ------------------------------------------------------------------

    def set_stance(self, s1: bool, s2: bool) -> None:
        """Gait phase input: legs in swing are lifted off the ground."""
        for i, s in enumerate((s1, s2)):
            if s and not self.stance[i]:
                self.ground[i] = self.x_f[i] / self.ratio - self.y
            self.stance[i] = s

    def measured(self) -> dict:
        """Sensor view exposed to the controller."""
        return {
            "p_acc": self.p_acc, "p_sup": self.p_sup, "p_rod": self.p_rod,
            "x_l": self.x_l, "v_l": self.v_l, "i_m": self.i_m,
            "y": self.y, "v_y": self.v_y,
            "x_f1": self.x_f[0], "x_f2": self.x_f[1],
            "n1": self.contact_n[0], "n2": self.contact_n[1],
            "p_l1": self.p_line[0], "p_l2": self.p_line[1],
            "th_l1": self.theta[0], "th_l2": self.theta[1],
        }

    # ------------------------------------------------------------------
    # sub-updates

    def _endstop(self, x: float, v: float, hi: float) -> float:
        if 0.0 <= x <= hi:
            return 0.0
        pen = -x if x < 0.0 else x - hi
        sign = 1.0 if x < 0.0 else -1.0
        self.flags["endstop"] += 1
        f = sign * self.k_end * pen - self.b_end * v
        self.ledger.endstop += self.b_end * v * v * self.dt
        return f

    def _node_update(self, p: float, cav: float, dvol_in: float,
                     compliance: float) -> tuple[float, float]:
        """Explicit node update with a zero-pressure cavity floor."""
        if cav > 0.0:
            cav -= dvol_in
            if cav >= 0.0:
                return 0.0, cav
            dvol_in = -cav
            cav = 0.0
            p = 0.0
        p += dvol_in / compliance
        if p < 0.0:
            cav = -p * compliance
            p = 0.0
            self.flags["cavitation"] += 1
        return p, cav

    def _line_step(self, i: int, dt: float) -> float:
        """Implicit hose + line-node update for leg *i*.

        Returns the volume drawn from the supply manifold this substep
        (nonzero only while the leg valve sits on its supply path).
        """
        th = self.theta[i]
        port = self.valve.port(th)
        cv = self.valve.cv(th)
        q = self.q_line[i]
        p = self.p_line[i]
        v_f = self.follower_speed[i] if self.followers_locked else self.v_f[i]
        draw_f = self.area * v_f

        if cv <= 0.0:
            # flow rams into a shut valve: its kinetic term dumps, node seals
            if q != 0.0:
                self.ledger.blocked_dump += 0.5 * self.i_line * q * q
                self.q_line[i] = 0.0
            p_new, cav = self._node_update(p, self.cav_line[i], -draw_f * dt,
                                           self.c_line)
            self.p_line[i] = p_new
            self.cav_line[i] = cav
            e_stored = 0.5 * self.c_line * (p_new * p_new - p * p)
            self.ledger.line_loss += -0.5 * (p + p_new) * draw_f * dt - e_stored
            return 0.0

        p_src = self.p_sup if port == "supply" else 0.0
        # valve orifice plus circuit minor losses, linearized around the
        # previous flow
        quad = 1.0 / (cv * cv) + self.k_quad
        b = 2.0 * abs(q) * quad
        a = -q * abs(q) * quad
        denom = self.i_line / dt + self.r_line + b + dt / self.c_line
        q_new = (p_src - a - p + self.i_line * q / dt
                 + (dt / self.c_line) * draw_f) / denom
        p_new = p + dt * (q_new - draw_f) / self.c_line
        cav = self.cav_line[i]

        if p_new < 0.0 or cav > 0.0:
            # node pinned at tank pressure while a cavity exists
            q_new = (p_src - a + self.i_line * q / dt) / (
                self.i_line / dt + self.r_line + b)
            cav += (draw_f - q_new) * dt
            if cav < 0.0:
                p_new = -cav / self.c_line
                cav = 0.0
            else:
                p_new = 0.0
                self.flags["cavitation"] += 1

        # element energy: source work in, follower work out, storage delta;
        # the remainder is hose resistance + orifice loss
        e_stored = (0.5 * self.i_line * (q_new * q_new - q * q)
                    + 0.5 * self.c_line * (p_new * p_new - p * p))
        e_in = p_src * q_new * dt
        e_out = 0.5 * (p + p_new) * draw_f * dt
        self.ledger.line_loss += e_in - e_out - e_stored

        self.q_line[i] = q_new
        self.p_line[i] = p_new
        self.cav_line[i] = cav
        if port == "supply":
            self.vol_supply[i] += q_new * dt
            return q_new * dt
        self.vol_tank[i] += q_new * dt
        return 0.0

    def _check_valve_step(self, dt: float) -> float:
        """One-way bypass relief from each line node back to the supply.

        Returns the volume pushed into the supply manifold this substep.
        """
        into_sup = 0.0
        for i in (0, 1):
            q = check_valve_flow_m3_s(self.check, self.p_line[i] - self.p_sup)
            if q <= 0.0:
                continue
            dv = q * dt
            p_old = self.p_line[i]
            self.p_line[i], self.cav_line[i] = self._node_update(
                p_old, self.cav_line[i], -dv, self.c_line)
            self.ledger.line_loss += (0.5 * (p_old + self.p_line[i])
                                      - self.p_sup) * dv
            into_sup += dv
        return into_sup

    def _rod_step(self, dt: float) -> float:
        """Implicit accumulator-valve orifice into the rod-side node.

        Returns the liquid volume drawn from the accumulator this substep.
        """
        th = self.theta[2]
        port = self.valve.port(th)
        cv = self.valve.cv(th)
        swept = -self.area_rod * self.v_l * dt    # chamber grows with x_l

        if cv <= 0.0:
            self.p_rod, self.cav_rod = self._node_update(
                self.p_rod, self.cav_rod, swept, self.c_rod)
            return 0.0

        p_src = self.p_acc if port == "supply" else 0.0
        if port == "supply" and self.v_acc <= 0.0 and p_src > self.p_rod:
            # bladder on its anti-extrusion ring: nothing left to deliver
            self.flags["acc_empty"] += 1
            self.p_rod, self.cav_rod = self._node_update(
                self.p_rod, self.cav_rod, swept, self.c_rod)
            return 0.0

        p = self.p_rod
        p_new = p
        q = 0.0
        for _ in range(4):
            dp = p_src - p_new
            q = cv * math.copysign(math.sqrt(abs(dp)), dp)
            slope = -cv / (2.0 * math.sqrt(max(abs(dp), 1.0)))
            h = self.c_rod * (p_new - p) - (q * dt + swept)
            p_new -= h / (self.c_rod - slope * dt)
        dp = p_src - p_new
        q = cv * math.copysign(math.sqrt(abs(dp)), dp)

        self.p_rod, self.cav_rod = self._node_update(
            p, self.cav_rod, q * dt + swept, self.c_rod)
        p_mid = 0.5 * (p + self.p_rod)
        if port == "supply":
            self.ledger.rod_orifice += (p_src - p_mid) * q * dt
            return q * dt
        self.ledger.rod_orifice += p_mid * (-q) * dt
        return 0.0

    # ------------------------------------------------------------------

    def step(self, i_cmd: float, omega_cmd: float,
             theta_cmd: tuple[float, float, float],
             f_hand: float = 0.0) -> None:
        """Advance one substep with held commands."""
        dt = self.dt
        led = self.ledger

        # valve servos: rate-limited first-order trackers
        gain = dt / self.valve.tau_s
        for k in (0, 1, 2):
            if self.valve_rate_fn is None:
                limit = self.valve.max_speed_deg_s * dt
            else:
                limit = self.valve_rate_fn(self.theta[k]) * dt
            move = (theta_cmd[k] - self.theta[k]) * gain
            if move > limit:
                move = limit
            elif move < -limit:
                move = -limit
            self.theta[k] += move
            led.valve_servo += abs(move) / 180.0 * self.e_switch

        # motor current loop inside the peak-torque and bus-voltage envelope
        omega_m = self.v_l / self.lead_rad
        i_tgt = max(-self.i_peak, min(self.i_peak, i_cmd))
        emf = self.k_t * omega_m
        i_hi = (self.v_bus - emf) / self.r_wind
        i_lo = (-self.v_bus - emf) / self.r_wind
        i_tgt = max(i_lo, min(i_hi, i_tgt))
        self.i_m += (i_tgt - self.i_m) * (dt / self.tau_i)
        led.motor_joule += self.r_wind * self.i_m * self.i_m * dt

        # pump drive (one-quadrant) and flow into the accumulator
        w_tgt = max(0.0, min(self.w_max, omega_cmd))
        self.omega_p += (w_tgt - self.omega_p) * (dt / self.tau_w)
        q_pump = self.pump_disp * self.omega_p - self.pump_alpha * self.p_acc
        led.pump_mech += self.pump_disp * self.omega_p * self.p_acc * dt
        led.pump_leak += self.pump_alpha * self.p_acc * self.p_acc * dt

        # stiff hydraulic paths (implicit), bypass relief (explicit)
        sup_draw = self._line_step(0, dt) + self._line_step(1, dt)
        cv_in = self._check_valve_step(dt) if self.check_valves else 0.0
        acc_draw = self._rod_step(dt)

        # accumulator gas: differential polytropic with rate-switched index
        dv = q_pump * dt - acc_draw
        if self.gas_fast:
            if abs(dv) < self.n_flow_thr * self.n_flow_hys * dt:
                self.gas_fast = False
        elif abs(dv) > self.n_flow_thr * dt:
            self.gas_fast = True
        n_eff = 1.4 if self.gas_fast else self.acc.n_poly
        v_gas = self.acc.v_a0_ml * 1e-6 - self.v_acc
        if v_gas <= 1e-9:
            raise HydraulicFault("accumulator gas volume collapsed",
                                 self.snapshot())
        p_mid = self.p_acc * (1.0 + 0.5 * n_eff * dv / v_gas)
        self.p_acc += n_eff * self.p_acc / v_gas * dv
        self.v_acc += dv
        if self.v_acc < 0.0:
            self.v_acc = 0.0
            self.p_acc = self.acc.p_a0_pa
        if self.p_acc > self.acc.p_max_pa:
            raise HydraulicFault("accumulator over rated pressure",
                                 self.snapshot())
        led.gas_stored += p_mid * dv

        # supply node: leader bore inflow minus manifold draw, plus bypass
        p_sup_old = self.p_sup
        dvol = self.area * self.v_l * dt - sup_draw + cv_in
        self.p_sup, self.cav_sup = self._node_update(
            p_sup_old, self.cav_sup, dvol, self.c_sup)

        # --- forces ---
        f_m = self.k_force * self.i_m
        f_fric = friction_pressure_pa(self.fric, self.i_m, self.v_l) \
            * self.area_rod
        f_leader = (f_m + self.p_rod * self.area_rod - self.p_sup * self.area
                    - f_fric + self._endstop(self.x_l, self.v_l, self.stroke_l))

        n_force = [0.0, 0.0]
        n_active = [False, False]
        for i in (0, 1):
            if not self.stance[i]:
                continue
            over = self.x_f[i] / self.ratio - self.y - self.ground[i]
            if over > 0.0:
                v_rel = self.v_f[i] / self.ratio - self.v_y
                n = self.k_contact * over + self.b_contact * v_rel
                if n > 0.0:
                    n_force[i] = n
                    n_active[i] = True
        self.contact_n = n_force

        # --- integrate velocities (self-damping implicit), then positions ---
        v_old = self.v_l
        self.v_l += f_leader / self.m_leader * dt
        v_mid = 0.5 * (v_old + self.v_l)
        self.x_l += self.v_l * dt
        led.motor_mech += f_m * v_mid * dt
        led.friction += f_fric * v_mid * dt

        if not self.followers_locked:
            inv_r = 1.0 / self.ratio
            for i in (0, 1):
                # a leg in swing is carried by the wearer: the follower is
                # held still, the pin does no work, and the line sees a
                # fixed boundary until touchdown
                if not self.stance[i]:
                    self.v_f[i] = 0.0
                    continue
                # contact force with the follower's own damping term removed;
                # that term is applied implicitly below
                if n_active[i]:
                    n_ext = n_force[i] - self.b_contact * inv_r * self.v_f[i]
                    b_self = self.b_contact * inv_r * inv_r + self.b_fol
                else:
                    n_ext = 0.0
                    b_self = self.b_fol
                # follower seal + knee-lever rubbing: regularized Coulomb
                # treated as secant damping so the stick regime stays stable
                v_prev = self.v_f[i]
                seal = (self.fric.fol_seal_pa
                        + self.fric.fol_seal_frac * self.p_line[i]) * self.area
                b_seal = seal / (abs(v_prev) + 1.0 / self.fric.gamma_s_per_m)
                b_self += b_seal
                f_nd = (self.p_line[i] * self.area - n_ext * inv_r
                        + self.f_bias
                        + self._endstop(self.x_f[i], self.v_f[i], self.stroke_f))
                self.v_f[i] = (v_prev + f_nd / self.m_fol * dt) / (
                    1.0 + b_self / self.m_fol * dt)
                v_m = 0.5 * (v_prev + self.v_f[i])
                self.x_f[i] += self.v_f[i] * dt
                led.bias += self.f_bias * v_m * dt
                led.friction += (self.b_fol + b_seal) * v_m * v_m * dt
                if n_active[i]:
                    v_rel = v_m * inv_r - self.v_y
                    led.contact_damping += self.b_contact * v_rel * v_rel * dt
        else:
            for i in (0, 1):
                if self.follower_speed[i] != 0.0:
                    self.x_f[i] += self.follower_speed[i] * dt

        if not self.cart_frozen:
            v_prev = self.v_y
            f_cart = n_force[0] + n_force[1] + f_hand \
                - self.cart_mass * self.g
            b_self = self.b_contact * (n_active[0] + n_active[1])
            f_cart += b_self * self.v_y   # restore, then damp implicitly
            self.v_y = (v_prev + f_cart / self.cart_mass * dt) / (
                1.0 + b_self / self.cart_mass * dt)
            v_m = 0.5 * (v_prev + self.v_y)
            self.y += self.v_y * dt
            led.hand += f_hand * v_m * dt

        self.t += dt

    def snapshot(self) -> dict:
        return {"t": self.t, "x_l": self.x_l, "v_l": self.v_l,
                "p_sup": self.p_sup, "p_rod": self.p_rod,
                "p_acc": self.p_acc, "v_acc_ml": self.v_acc * 1e6,
                "p_line": list(self.p_line), "theta": list(self.theta),
                "i_m": self.i_m, "y": self.y}

"""Lumped component models for the hydrostatic transmission.

Internal math is SI; the pump and accumulator interfaces speak the bench's
natural units (mL, mL/s, rad/s, Pa) because their published coefficients do.
Conversions happen only at the simulator boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class HydraulicFault(RuntimeError):
    """Raised when a component is driven outside its physical envelope."""

    def __init__(self, message: str, snapshot: dict | None = None):
        super().__init__(message)
        self.snapshot = snapshot or {}


# ---------------------------------------------------------------------------
# Accumulator
# ---------------------------------------------------------------------------

@dataclass
class AccumulatorParams:
    """Gas-charged accumulator.

    v_a0_ml   total gas volume at zero liquid content [mL]
    p_a0_pa   precharge pressure at zero liquid content [Pa]
    n_poly    polytropic exponent (1.0 slow/isothermal, 1.4 fast/adiabatic)
    p_max_pa  rated pressure ceiling [Pa]
    """

    v_a0_ml: float = 500.0
    p_a0_pa: float = 1.03e6
    n_poly: float = 1.0
    p_max_pa: float = 21.0e6

    def __post_init__(self):
        if self.v_a0_ml <= 0 or self.p_a0_pa <= 0:
            raise ValueError("accumulator volume and precharge must be positive")
        if self.n_poly < 1.0 or self.n_poly > 1.4:
            raise ValueError("polytropic exponent outside [1.0, 1.4]")


def accumulator_pressure(params: AccumulatorParams, v_a_ml: float) -> float:
    """Gas pressure [Pa] at liquid volume v_a_ml.

    P = P0 * V0^n / (V0 - Va)^n.  Faults on negative liquid volume, on gas
    volume collapsing to zero, and on exceeding the rated pressure.
    """
    if v_a_ml < 0.0:
        raise HydraulicFault("negative liquid volume in accumulator",
                             {"v_a_ml": v_a_ml})
    gas = params.v_a0_ml - v_a_ml
    if gas <= 0.0:
        raise HydraulicFault("accumulator gas volume collapsed",
                             {"v_a_ml": v_a_ml, "v_a0_ml": params.v_a0_ml})
    p = params.p_a0_pa * (params.v_a0_ml / gas) ** params.n_poly
    if p > params.p_max_pa:
        raise HydraulicFault("accumulator over rated pressure",
                             {"v_a_ml": v_a_ml, "p_pa": p})
    return p


def accumulator_max_liquid_ml(params: AccumulatorParams) -> float:
    """Liquid volume [mL] at which the rated pressure is reached."""
    return params.v_a0_ml * (1.0 - (params.p_a0_pa / params.p_max_pa) ** (1.0 / params.n_poly))


def accumulator_liquid_at_pressure(params: AccumulatorParams, p_pa: float) -> float:
    """Liquid volume [mL] that puts the gas at p_pa (inverse of the gas law).

    Clamps to 0 below the precharge pressure.
    """
    if p_pa <= params.p_a0_pa:
        return 0.0
    if p_pa > params.p_max_pa:
        raise HydraulicFault("requested pressure above rating", {"p_pa": p_pa})
    return params.v_a0_ml * (1.0 - (params.p_a0_pa / p_pa) ** (1.0 / params.n_poly))


def accumulator_charge_work_j(params: AccumulatorParams, v_a_ml: float) -> float:
    """Quasi-static work [J] to fill the accumulator from empty to v_a_ml."""
    v0 = params.v_a0_ml * 1e-6
    va = v_a_ml * 1e-6
    p0 = params.p_a0_pa
    n = params.n_poly
    if abs(n - 1.0) < 1e-12:
        return p0 * v0 * math.log(v0 / (v0 - va))
    return p0 * v0**n * ((v0 - va) ** (1.0 - n) - v0 ** (1.0 - n)) / (n - 1.0)


# ---------------------------------------------------------------------------
# Gear pump
# ---------------------------------------------------------------------------

@dataclass
class PumpParams:
    """Fixed-displacement gear pump with pressure- and speed-dependent leak.

    v_displ_ml_per_rad  displacement [mL/rad]
    alpha_ml_s_pa       leak flow per unit pressure rise [mL/s/Pa]
    beta_ml_per_rad     leak reduction per unit speed [mL/rad]
    """

    v_displ_ml_per_rad: float
    alpha_ml_s_pa: float
    beta_ml_per_rad: float = 0.0

    def __post_init__(self):
        if self.v_displ_ml_per_rad <= self.beta_ml_per_rad or self.beta_ml_per_rad < 0:
            raise ValueError("need v_displ > beta >= 0")
        if self.alpha_ml_s_pa <= 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def from_slopes(cls, m_p_pa_s: float = 9709.0, m_q_rad_per_ml: float = 9.5,
                    beta_ml_per_rad: float = 0.0) -> "PumpParams":
        """Back-solve displacement and leak from the two measured slopes.

        m_q = 1/(v_displ - beta) is the speed-per-flow gain and
        m_p = (v_displ - beta)/alpha the stall pressure-per-speed slope.
        Only the combinations are observable, so beta defaults to zero.
        """
        v_eff = 1.0 / m_q_rad_per_ml
        return cls(v_displ_ml_per_rad=v_eff + beta_ml_per_rad,
                   alpha_ml_s_pa=v_eff / m_p_pa_s,
                   beta_ml_per_rad=beta_ml_per_rad)

    @property
    def m_q_rad_per_ml(self) -> float:
        return 1.0 / (self.v_displ_ml_per_rad - self.beta_ml_per_rad)

    @property
    def m_p_pa_s(self) -> float:
        return (self.v_displ_ml_per_rad - self.beta_ml_per_rad) / self.alpha_ml_s_pa


def pump_flow_ml_s(params: PumpParams, omega_rad_s: float, dp_pa: float) -> float:
    """Delivered flow [mL/s]: displacement flow minus the leak term
    (alpha * dP - beta * omega)."""
    return (params.v_displ_ml_per_rad + params.beta_ml_per_rad) * omega_rad_s \
        - params.alpha_ml_s_pa * dp_pa


def pump_speed_cmd_rad_s(params: PumpParams, q_d_ml_s: float, p_a_pa: float) -> float:
    """Speed command delivering q_d against an accumulator at p_a:
    omega = m_q * q_d + p_a / m_p (leak-compensating feedforward)."""
    return params.m_q_rad_per_ml * q_d_ml_s + p_a_pa / params.m_p_pa_s


def pump_torque_nm(params: PumpParams, dp_pa: float) -> float:
    """Shaft torque [N*m] at pressure rise dp (displacement torque)."""
    return (params.v_displ_ml_per_rad + params.beta_ml_per_rad) * 1e-6 * dp_pa


# ---------------------------------------------------------------------------
# Leader-screw friction
# ---------------------------------------------------------------------------

@dataclass
class FrictionParams:
    """Pressure-equivalent friction of the leader piston + ball screw.

    The Coulomb magnitude combines a constant seal term with a load-dependent
    screw term scaled by (1 - eta_bs); both are expressed as pressures over
    the rod-side area.  The tanh slope is quoted per mm/s of piston speed
    (0.3), stored here per m/s, so the Coulomb term saturates within a few
    mm/s as observed on the bench.
    """

    mu_seal_pa: float = 0.07e6          # [Pa]
    eta_bs: float = 0.96                # ball-screw efficiency
    b_pa_s_per_m: float = 0.004e6      # [Pa/(m/s)] viscous term
    gamma_s_per_m: float = 300.0        # tanh slope [s/m] (0.3 per mm/s)
    k_t_nm_a: float = 0.093             # [N*m/A]
    lead_m_per_rad: float = 0.020 / (2.0 * math.pi)
    area_rod_m2: float = 524e-6         # [m^2]
    # follower piston + knee-lever rubbing, referenced to the follower bore:
    # a constant breakaway term plus a squeeze term growing with line pressure
    fol_seal_pa: float = 0.04e6         # [Pa]
    fol_seal_frac: float = 0.06         # of line pressure


def friction_pressure_pa(params: FrictionParams, i_m_a: float, xdot_m_s: float) -> float:
    """Friction as an equivalent pressure [Pa], odd in piston speed."""
    load = abs(i_m_a * params.k_t_nm_a / (params.lead_m_per_rad * params.area_rod_m2))
    coulomb = params.mu_seal_pa + (1.0 - params.eta_bs) * load
    return coulomb * math.tanh(params.gamma_s_per_m * xdot_m_s) \
        + params.b_pa_s_per_m * xdot_m_s


# ---------------------------------------------------------------------------
# Motorized three-way valves
# ---------------------------------------------------------------------------

@dataclass
class ValveModel:
    """L-port ball valve routing one line to tank (0 deg) or supply (180 deg).

    The flow coefficient ramps linearly from full-open at either seat to zero
    at the blocked band [blocked_lo, blocked_hi]; inside the band all ports
    are shut.  Near 113 deg the supply path is only partially open, matching
    the bench's early-connection behavior.

    The tank path carries a fixed restrictor (meter-out) sized near critical
    damping of the hose mode, so venting a charged line drains it instead of
    letting the hose column coast a large slug out through the port.
    """

    cv_max: float = 3.5e-6            # [(m^3/s)/sqrt(Pa)] full-open
    cv_tank_max: float = 0.25e-6      # [(m^3/s)/sqrt(Pa)] restricted vent path
    blocked_lo_deg: float = 80.0
    blocked_hi_deg: float = 100.0
    max_speed_deg_s: float = 2600.0
    tau_s: float = 0.010              # servo tracking time constant

    def __post_init__(self):
        if not 0.0 < self.blocked_lo_deg < self.blocked_hi_deg < 180.0:
            raise ValueError("blocked band must sit strictly inside (0, 180)")
        if self.cv_max <= 0 or self.cv_tank_max <= 0:
            raise ValueError("flow coefficients must be positive")

    def cv(self, theta_deg: float) -> float:
        """Flow coefficient of whichever path is open at this angle."""
        th = min(max(theta_deg, 0.0), 180.0)
        if th <= self.blocked_lo_deg:
            return self.cv_tank_max * (self.blocked_lo_deg - th) / self.blocked_lo_deg
        if th >= self.blocked_hi_deg:
            return self.cv_max * (th - self.blocked_hi_deg) / (180.0 - self.blocked_hi_deg)
        return 0.0

    def port(self, theta_deg: float) -> str:
        """Active connection at this angle: 'tank', 'blocked' or 'supply'."""
        if theta_deg < self.blocked_lo_deg:
            return "tank"
        if theta_deg > self.blocked_hi_deg:
            return "supply"
        return "blocked"


def valve_flow_m3_s(valve: ValveModel, theta_deg: float, dp_pa: float) -> float:
    """Orifice flow [m^3/s] through the active path at pressure drop dp."""
    cv = valve.cv(theta_deg)
    if cv == 0.0 or dp_pa == 0.0:
        return 0.0
    return cv * math.copysign(math.sqrt(abs(dp_pa)), dp_pa)


def orifice_drop_pa(cv: float, q_m3_s: float) -> float:
    """Pressure drop [Pa] sustaining flow q through coefficient cv."""
    if cv <= 0.0:
        raise ValueError("orifice drop undefined for a blocked path")
    return math.copysign((q_m3_s / cv) ** 2, q_m3_s)


@dataclass
class CheckValveParams:
    """One-way bypass around a leg valve (line side back to supply)."""

    cv: float = 2.0e-6                # [(m^3/s)/sqrt(Pa)]
    cracking_pa: float = 30e3         # [Pa]


def check_valve_flow_m3_s(params: CheckValveParams, dp_pa: float) -> float:
    """Forward flow [m^3/s] once dp exceeds the cracking pressure; zero
    otherwise (no reverse flow)."""
    excess = dp_pa - params.cracking_pa
    if excess <= 0.0:
        return 0.0
    return params.cv * math.sqrt(excess)


# ---------------------------------------------------------------------------
# Transmission line lumps
# ---------------------------------------------------------------------------

@dataclass
class LineParams:
    """Series inertance/resistance into a compliant line-end node.

    The compliance is referenced at the follower load, so the blocked-load
    natural frequency is 1/(2 pi sqrt(I C)).

    ``quad_pa_s2_m6`` is the lumped orifice-law coefficient of everything in
    series with the hose (fittings, couplings, the reduced valve bore): the
    extra drop is quad * q|q|.  It is invisible at gait flows (tens of mL/s)
    and dominates at launch/landing flows (hundreds of mL/s).
    """

    inertance_pa_s2_m3: float
    compliance_m3_pa: float
    resistance_pa_s_m3: float
    quad_pa_s2_m6: float = 0.0

    @property
    def natural_frequency_hz(self) -> float:
        return 1.0 / (2.0 * math.pi * math.sqrt(self.inertance_pa_s2_m3 *
                                                self.compliance_m3_pa))

    @property
    def damping_ratio(self) -> float:
        return 0.5 * self.resistance_pa_s_m3 * math.sqrt(
            self.compliance_m3_pa / self.inertance_pa_s2_m3)

    @classmethod
    def from_hose(cls, length_m: float = 1.0, inner_diameter_m: float = 8.7e-3,
                  fluid_density_kg_m3: float = 870.0,
                  natural_frequency_hz: float = 30.0,
                  damping_ratio: float = 0.1,
                  loss_k_total: float = 55.0) -> "LineParams":
        """Size the lumps from hose geometry plus a calibrated natural
        frequency (the effective compliance absorbs hose stretch and
        entrained air, so it is fit rather than derived).

        ``loss_k_total`` is the dimensionless minor-loss sum of the circuit
        in series with one line (valve bore, elbows, quick-couplings, port
        restrictions), calibrated against the bench's high-power behavior;
        the orifice-law coefficient follows as K rho / (2 A^2).
        """
        area = math.pi * inner_diameter_m**2 / 4.0
        inertance = fluid_density_kg_m3 * length_m / area
        w = 2.0 * math.pi * natural_frequency_hz
        compliance = 1.0 / (w * w * inertance)
        resistance = 2.0 * damping_ratio * math.sqrt(inertance / compliance)
        quad = loss_k_total * fluid_density_kg_m3 / (2.0 * area * area)
        return cls(inertance, compliance, resistance, quad)


@dataclass
class CylinderParams:
    """Working areas and strokes of the leader and follower cylinders."""

    area_m2: float = 572e-6
    area_rod_m2: float = 524e-6
    stroke_leader_m: float = 0.203
    stroke_follower_m: float = 0.076

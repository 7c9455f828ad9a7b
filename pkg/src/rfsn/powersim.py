"""Energy subsystem: harvester, storage capacitor, leakage, node state machines."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Active-node supervisor thresholds (volts).
V_START = 3.2  # cold-start boot voltage
V_WAKE = 2.6  # wake from sleep and resume transmitting
V_SLEEP = 2.3  # stop transmitting, go back to sleep
V_MIN = 1.8  # brown-out floor; dying below this during boot is fatal

E_BOOT_J = 1.68e-3  # radio + stack bring-up cost
E_PACKET_J = 177e-6  # one 105-byte MSDU transmission
MSDU_BYTES = 105
PACKET_TIME_S = 1e-3

P_SLEEP_W = 36e-9  # deep-sleep draw of the passive (backscatter) node
PASSIVE_OP_POWER_W = 8.1e-6  # headline operating power of the backscatter node

DEFAULT_ACTIVE_CAP_F = 1e-3
DEFAULT_PASSIVE_CAP_F = 22e-6


@dataclass(frozen=True)
class Capacitor:
    """Storage capacitor tracked by stored energy (E = C*V^2/2)."""

    capacitance_f: float
    energy_j: float = 0.0

    def __post_init__(self) -> None:
        if self.capacitance_f <= 0:
            raise ConfigurationError(f"capacitance must be positive, got {self.capacitance_f}")
        if self.energy_j < 0:
            raise ConfigurationError(f"stored energy cannot be negative, got {self.energy_j}")

    @classmethod
    def at_voltage(cls, capacitance_f: float, v_volts: float) -> "Capacitor":
        return cls(capacitance_f, 0.5 * capacitance_f * v_volts**2)

    @property
    def v_volts(self) -> float:
        return math.sqrt(2.0 * self.energy_j / self.capacitance_f)

    v = v_volts

    def energy_at(self, v_volts: float) -> float:
        return 0.5 * self.capacitance_f * v_volts**2


def _step_ledger(
    c: Capacitor, p_in_w: float, p_out_w: float, dt_s: float
) -> tuple[Capacitor, float, float]:
    """One Euler step; returns (capacitor, harvested_j, consumed_j).

    The consumed ledger entry is the energy actually removed, which is less
    than p_out*dt when the capacitor bottoms out at zero.
    """
    if dt_s <= 0:
        raise ConfigurationError("dt must be positive")
    harvested = p_in_w * dt_s
    e_new = c.energy_j + harvested - p_out_w * dt_s
    if e_new < 0.0:
        consumed = c.energy_j + harvested
        e_new = 0.0
    else:
        consumed = p_out_w * dt_s
    return Capacitor(c.capacitance_f, e_new), harvested, consumed


def step_capacitor(c: Capacitor, p_in_w: float, p_out_w: float, dt_s: float) -> Capacitor:
    """Euler step on stored energy: E' = max(0, E + (p_in - p_out)*dt)."""
    return _step_ledger(c, p_in_w, p_out_w, dt_s)[0]


def _load_xy_csv(path) -> list[tuple[float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) != 2:
            raise ConfigurationError(f"expected a two-column curve CSV, got header {header}")
        return [(float(a), float(b)) for a, b in reader]


@dataclass(frozen=True)
class HarvesterModel:
    """RF-to-DC conversion: piecewise-linear efficiency vs incident power (dBm).

    Below the first anchor the harvester is below sensitivity and delivers
    nothing; above the last anchor efficiency saturates.
    """

    efficiency_points: tuple[tuple[float, float], ...]
    sensitivity_dbm: float = -math.inf
    scale: float = 1.0

    def __post_init__(self) -> None:
        pts = self.efficiency_points
        if len(pts) < 2:
            raise ConfigurationError("efficiency curve needs at least two points")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ConfigurationError("efficiency curve abscissae must be strictly increasing")
        if any(b[1] < a[1] for a, b in zip(pts, pts[1:])):
            raise ConfigurationError("efficiency curve must be monotone non-decreasing")
        if any(not 0.0 <= eta <= 1.0 for _, eta in pts) or not 0.0 < self.scale <= 1.0 / max(
            eta for _, eta in pts
        ):
            raise ConfigurationError("scaled efficiency must stay within [0, 1]")

    @classmethod
    def default_active(cls) -> "HarvesterModel":
        # single published anchor (5 dBm, 0.60); the rest are calibration defaults
        return cls(((-10.0, 0.25), (0.0, 0.50), (5.0, 0.60), (10.0, 0.62)), -2.5)

    @classmethod
    def default_passive(cls) -> "HarvesterModel":
        return cls(
            (
                (-8.5, 0.045),
                (-6.0, 0.10),
                (-4.0, 0.17),
                (-2.0, 0.25),
                (0.0, 0.32),
                (5.0, 0.45),
                (10.0, 0.50),
            ),
            -8.5,
        )

    @classmethod
    def from_csv(cls, path, sensitivity_dbm: float = -math.inf, scale: float = 1.0) -> "HarvesterModel":
        return cls(tuple(_load_xy_csv(path)), sensitivity_dbm, scale)

    def with_scale(self, scale: float) -> "HarvesterModel":
        return HarvesterModel(self.efficiency_points, self.sensitivity_dbm, scale)

    def efficiency(self, pr_dbm: float) -> float:
        x = np.array([p for p, _ in self.efficiency_points])
        y = np.array([eta for _, eta in self.efficiency_points])
        if pr_dbm < self.sensitivity_dbm or pr_dbm < x[0]:
            return 0.0
        return self.scale * float(np.interp(pr_dbm, x, y))

    def harvested_power_w(self, pr_dbm: float) -> float:
        return self.efficiency(pr_dbm) * 10.0 ** ((pr_dbm - 30.0) / 10.0)


def harvested_power(pr_dbm: float, h: HarvesterModel) -> float:
    """RF-to-DC output power (W) at the given incident level."""
    return h.harvested_power_w(pr_dbm)


@dataclass(frozen=True)
class LeakageCurve:
    """Board leakage power vs capacitor voltage, log-linear between anchors.

    ``without_startup`` is the raw board including the always-on regulator
    path; ``with_startup`` adds the startup gate that isolates the load until
    the supervisor releases it, collapsing sub-threshold leakage.
    """

    points: tuple[tuple[float, float], ...]
    variant: str = "custom"

    def __post_init__(self) -> None:
        pts = self.points
        if len(pts) < 1:
            raise ConfigurationError("leakage curve needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ConfigurationError("leakage curve voltages must be strictly increasing")
        if any(p <= 0 for _, p in pts):
            raise ConfigurationError("leakage powers must be positive (log interpolation)")

    @classmethod
    def default_without_startup(cls) -> "LeakageCurve":
        return cls(((0.0, 1e-7), (0.6, 3.1e-6), (1.8, 2.1e-3)), "without_startup")

    @classmethod
    def default_with_startup(cls) -> "LeakageCurve":
        return cls(((0.0, 5e-8), (0.6, 1.0e-6), (1.8, 6.1e-5)), "with_startup")

    @classmethod
    def constant(cls, power_w: float, variant: str = "constant") -> "LeakageCurve":
        return cls(((0.0, power_w),), variant)

    @classmethod
    def from_csv(cls, path, variant: str = "custom") -> "LeakageCurve":
        return cls(tuple(_load_xy_csv(path)), variant)

    def power_w(self, v_volts: float) -> float:
        v = np.array([p[0] for p in self.points])
        logp = np.log([p[1] for p in self.points])
        return float(np.exp(np.interp(v_volts, v, logp)))  # np.interp clamps at the ends

    def max_power_below(self, v_volts: float) -> float:
        grid = np.linspace(0.0, v_volts, 257)
        return max(self.power_w(float(v)) for v in grid)


def time_to_voltage(
    c: Capacitor,
    v_target: float,
    pr_dbm: float,
    harvester: HarvesterModel,
    leakage: LeakageCurve,
    dt_s: float = 1e-3,
    stall_steps: int = 1000,
) -> float:
    """Seconds to charge to v_target at constant incident power; inf if never.

    Forward-Euler on stored energy with dt <= 1 ms.  A run of ``stall_steps``
    consecutive steps with no energy gain declares the target unreachable.
    """
    if dt_s > 1e-3 or dt_s <= 0:
        raise ConfigurationError("dt must lie in (0, 1e-3] s")
    p_in = harvester.harvested_power_w(pr_dbm)
    t = 0.0
    stalled = 0
    while c.v_volts < v_target:
        c_next = step_capacitor(c, p_in, leakage.power_w(c.v_volts), dt_s)
        stalled = stalled + 1 if c_next.energy_j <= c.energy_j else 0
        if stalled >= stall_steps:
            return math.inf
        c = c_next
        t += dt_s
    return t


def min_startup_incident_power(
    leak: LeakageCurve,
    h: HarvesterModel,
    v_target: float = V_MIN,
    lo_dbm: float = -60.0,
    hi_dbm: float = 40.0,
) -> float:
    """Smallest incident power whose harvest beats leakage everywhere below v_target.

    Returns math.inf when no power level in the search range suffices.
    """
    need = leak.max_power_below(v_target)
    if h.harvested_power_w(hi_dbm) <= need:
        return math.inf
    for _ in range(60):
        mid = 0.5 * (lo_dbm + hi_dbm)
        if h.harvested_power_w(mid) > need:
            hi_dbm = mid
        else:
            lo_dbm = mid
    return hi_dbm


@dataclass(frozen=True)
class ActiveNodeFSM:
    """Thresholds and per-event energy costs of the actively transmitting node."""

    v_start: float = V_START
    v_wake: float = V_WAKE
    v_sleep: float = V_SLEEP
    v_min: float = V_MIN
    e_boot_j: float = E_BOOT_J
    e_packet_j: float = E_PACKET_J
    msdu_bytes: int = MSDU_BYTES
    packet_time_s: float = PACKET_TIME_S

    def __post_init__(self) -> None:
        if not self.v_min < self.v_sleep < self.v_wake < self.v_start:
            raise ConfigurationError(
                "thresholds must satisfy v_min < v_sleep < v_wake < v_start"
            )
        if min(self.e_boot_j, self.e_packet_j, self.packet_time_s) <= 0:
            raise ConfigurationError("energy costs and packet time must be positive")


@dataclass
class SimTrace:
    """Event log plus an energy ledger for conservation checks."""

    events: list[tuple[float, str, float]] = field(default_factory=list)
    packets_sent: int = 0
    bytes_sent: int = 0
    harvested_j: float = 0.0
    consumed_j: float = 0.0
    initial_energy_j: float = 0.0
    final_energy_j: float = 0.0

    def log(self, t: float, kind: str, v: float) -> None:
        self.events.append((t, kind, v))

    def energy_residual_j(self) -> float:
        return (self.final_energy_j - self.initial_energy_j) - (
            self.harvested_j - self.consumed_j
        )

    def to_csv(self, path, msdu_bytes: int = MSDU_BYTES) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "event", "v", "packets_cum", "bytes_cum"])
            packets = 0
            for t, kind, v in self.events:
                if kind == "packet":
                    packets += 1
                w.writerow([repr(t), kind, repr(v), packets, packets * msdu_bytes])


COLD, BOOTING, TRANSMITTING, SLEEPING, DEAD = "cold", "booting", "transmitting", "sleeping", "dead"


def run_active_fsm(
    fsm: ActiveNodeFSM,
    c: Capacitor,
    pr_dbm: float,
    h: HarvesterModel,
    leak: LeakageCurve,
    duration_s: float = 60.0,
    dt_s: float = 1e-3,
    harvest_while_transmitting: bool = True,
) -> SimTrace:
    """Duty-cycle simulation of the active node at constant incident power.

    Cold-charges to v_start, pays the boot cost, then alternates transmit
    bursts (packets sent back-to-back while the budget allows dropping no
    lower than v_sleep) with recharge sleeps up to v_wake.
    """
    p_in = h.harvested_power_w(pr_dbm)
    trace = SimTrace(initial_energy_j=c.energy_j)
    state = COLD
    t = 0.0
    trace.log(t, "start", c.v_volts)
    e_sleep = c.energy_at(fsm.v_sleep)

    while t < duration_s and state != DEAD:
        if state in (COLD, SLEEPING):
            c, got, used = _step_ledger(c, p_in, leak.power_w(c.v_volts), dt_s)
            trace.harvested_j += got
            trace.consumed_j += used
            t += dt_s
            threshold = fsm.v_start if state == COLD else fsm.v_wake
            if c.v_volts >= threshold:
                if state == COLD:
                    # boot is an impulse: the whole bring-up cost at once
                    c, got, used = _step_ledger(c, 0.0, fsm.e_boot_j / dt_s, dt_s)
                    trace.harvested_j += got
                    trace.consumed_j += used
                    trace.log(t, "boot", c.v_volts)
                    if c.v_volts < fsm.v_min:
                        state = DEAD
                        t += dt_s
                        trace.log(t, "dead", c.v_volts)
                        continue
                else:
                    trace.log(t, "wake", c.v_volts)
                state = TRANSMITTING
        elif state == TRANSMITTING:
            pin_tx = p_in if harvest_while_transmitting else 0.0
            pt = fsm.packet_time_s
            gain = pin_tx * pt
            drain = leak.power_w(c.v_volts) * pt + fsm.e_packet_j
            if c.energy_j + gain - drain >= e_sleep and t + pt <= duration_s:
                c, got, used = _step_ledger(c, pin_tx, drain / pt, pt)
                trace.harvested_j += got
                trace.consumed_j += used
                t += pt
                trace.packets_sent += 1
                trace.bytes_sent += fsm.msdu_bytes
                trace.log(t, "packet", c.v_volts)
            else:
                # take the first recharge step before logging so every event
                # timestamp is strictly later than the last packet's
                state = SLEEPING
                c, got, used = _step_ledger(c, p_in, leak.power_w(c.v_volts), dt_s)
                trace.harvested_j += got
                trace.consumed_j += used
                t += dt_s
                trace.log(t, "sleep", c.v_volts)

    trace.final_energy_j = c.energy_j
    return trace


# Measured operating power of the backscatter front end, keyed by
# (fosc_hz, supply_volts).
PASSIVE_OP_POWER_TABLE_W: dict[tuple[float, float], float] = {
    (32768.0, 1.8): 9.3e-6,
    (1e6, 1.8): 392e-6,
    (2e6, 1.8): 418e-6,
    (4e6, 1.8): 470e-6,
    (32768.0, 3.0): 26.3e-6,
    (1e6, 3.0): 850e-6,
    (2e6, 3.0): 934e-6,
    (4e6, 3.0): 1098e-6,
}


@dataclass(frozen=True)
class PassiveNodeModel:
    """Power model of the backscatter node: measured operating draw + sleep floor."""

    p_op_by_clock: dict[tuple[float, float], float] = field(
        default_factory=lambda: dict(PASSIVE_OP_POWER_TABLE_W)
    )
    p_sleep_w: float = P_SLEEP_W

    def __post_init__(self) -> None:
        for vdd in {k[1] for k in self.p_op_by_clock}:
            col = sorted((f, p) for (f, v), p in self.p_op_by_clock.items() if v == vdd)
            if any(b[1] <= a[1] for a, b in zip(col, col[1:])):
                raise ConfigurationError(
                    f"operating power must increase with fosc at {vdd} V"
                )

    def operating_power_w(self, fosc_hz: float, vdd_volts: float) -> float:
        key = (fosc_hz, vdd_volts)
        if key not in self.p_op_by_clock:
            raise ConfigurationError(
                f"no measured operating power for fosc={fosc_hz} Hz at {vdd_volts} V; "
                f"known points: {sorted(self.p_op_by_clock)}"
            )
        return self.p_op_by_clock[key]


@dataclass(frozen=True)
class PassiveSteadyState:
    p_harvest_w: float
    p_op_w: float
    margin_w: float
    duty_cycle: float
    sustainable: bool


def passive_steady_state(
    pm: PassiveNodeModel,
    fosc_hz: float,
    vdd_volts: float,
    pr_dbm: float,
    h: HarvesterModel,
) -> PassiveSteadyState:
    """Harvest-vs-draw budget for the backscatter node at one clock/supply point."""
    p_h = h.harvested_power_w(pr_dbm)
    p_op = pm.operating_power_w(fosc_hz, vdd_volts)
    if p_h <= pm.p_sleep_w:
        duty = 0.0
    else:
        duty = min(1.0, (p_h - pm.p_sleep_w) / (p_op - pm.p_sleep_w))
    return PassiveSteadyState(p_h, p_op, p_h - p_op, duty, sustainable=p_h >= p_op)

"""Experiment harness: configs, Monte-Carlo BER sweeps, charge sweeps, calibration."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import channel, chirp, powersim, rxdsp
from .errors import CalibrationError, ConfigurationError

SWEEP_AXES = ("eirp_dbm", "depth_cm", "bandwidth_hz", "pr_dbm")
TEMPLATE_KINDS = ("square-quantized", "square-ideal", "cosine", "complex")


@dataclass
class ExperimentConfig:
    """Flat experiment description, round-trippable through `key = value` files."""

    scenario: str = "ber-sweep"
    sf: int = 7
    fosc_hz: float = 32768.0
    depth_cm: float = 13.5
    eirp_dbm: float = 22.1
    n0_w_per_hz: float = 1.0
    composite_gain_db: float = 0.0
    detection_fraction: float = rxdsp.PAPER_DETECTION_FRACTION
    template: str = "square-quantized"
    sweep_axis: str = "eirp_dbm"
    sweep_values: list[float] = field(default_factory=lambda: [22.1, 23.0, 24.0, 25.0])
    n_symbols: int = 20000
    base_seed: int = 1234
    bursts_enabled: bool = False
    burst_period_s: float = channel.W_BURST_PERIOD_S
    burst_duration_s: float = channel.W_BURST_DURATION_S
    burst_amplitude_scale: float = channel.W_BURST_AMPLITUDE_SCALE
    # charge-sweep knobs
    charge_variant: str = "passive"  # passive | active
    capacitance_f: float = powersim.DEFAULT_PASSIVE_CAP_F
    target_v: float = powersim.V_MIN
    dt_s: float = 1e-3
    efficiency_scale: float = 1.0
    # calibration knobs
    anchor_eirp_dbm: float = 22.1
    anchor_ber: float = 0.162
    n_symbols_calibration: int = 30000

    def validate(self) -> None:
        problems = []
        if not chirp.SF_MIN <= self.sf <= chirp.SF_MAX:
            problems.append(f"sf={self.sf} outside [{chirp.SF_MIN}, {chirp.SF_MAX}]")
        if self.fosc_hz <= 0:
            problems.append(f"fosc_hz={self.fosc_hz} must be positive")
        if self.n0_w_per_hz <= 0:
            problems.append(f"n0_w_per_hz={self.n0_w_per_hz} must be positive")
        if self.template not in TEMPLATE_KINDS:
            problems.append(f"template={self.template!r} not one of {TEMPLATE_KINDS}")
        if self.sweep_axis not in SWEEP_AXES:
            problems.append(f"sweep_axis={self.sweep_axis!r} not one of {SWEEP_AXES}")
        if not self.sweep_values:
            problems.append("sweep_values is empty")
        if self.n_symbols < 1:
            problems.append(f"n_symbols={self.n_symbols} must be >= 1")
        if not 0.0 < self.detection_fraction <= 1.0:
            problems.append(f"detection_fraction={self.detection_fraction} outside (0, 1]")
        if min(self.burst_period_s, self.burst_duration_s) <= 0:
            problems.append("burst period and duration must be positive")
        if self.burst_amplitude_scale < 0:
            problems.append("burst_amplitude_scale must be non-negative")
        if self.charge_variant not in ("passive", "active"):
            problems.append(f"charge_variant={self.charge_variant!r} not passive/active")
        if self.capacitance_f <= 0:
            problems.append(f"capacitance_f={self.capacitance_f} must be positive")
        if not 0 < self.dt_s <= 1e-3:
            problems.append(f"dt_s={self.dt_s} outside (0, 1e-3]")
        if self.efficiency_scale <= 0:
            problems.append(f"efficiency_scale={self.efficiency_scale} must be positive")
        if not 0.0 < self.anchor_ber < 0.5:
            problems.append(f"anchor_ber={self.anchor_ber} outside (0, 0.5)")
        if problems:
            raise ConfigurationError("invalid config: " + "; ".join(problems))


def _coerce(raw: str, type_name: str):
    raw = raw.strip()
    if type_name == "bool":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"cannot parse boolean from {raw!r}")
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    if type_name == "str":
        return raw
    if type_name == "list[float]":
        return [float(v) for v in raw.split(",") if v.strip()]
    raise ConfigurationError(f"unsupported config field type {type_name}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse `key = value` lines (# comments, blank lines allowed)."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kwargs = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected `key = value`, got {line!r}")
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in types:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            kwargs[key] = _coerce(raw, types[key])
        except (ValueError, ConfigurationError) as exc:
            problems.append(f"line {lineno}: bad value for {key}: {exc}")
    if problems:
        raise ConfigurationError("config parse failed: " + "; ".join(problems))
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


class BerEngine:
    """Vectorized Monte-Carlo symbol chain for one ChirpParams/template pair.

    Each template is mean-removed and scaled to unit AC power, so the signal
    power equals ps for every symbol and the dechirp-bin capture matches the
    per-symbol detection fraction exactly.
    """

    def __init__(self, p: chirp.ChirpParams, kind: str = "square-quantized"):
        if kind not in TEMPLATE_KINDS:
            raise ConfigurationError(f"unknown template kind {kind!r}")
        self.p = p
        self.kind = kind
        self.complex_noise = kind == "complex"
        m = p.samples_per_symbol
        n = p.n_bins
        t = np.arange(m) / p.fs_hz
        if kind == "complex":
            tpl = np.empty((n, m), dtype=np.complex128)
            for s in range(n):
                tpl[s] = np.exp(1j * chirp.symbol_phase(s, p, t))
        elif kind == "cosine":
            tpl = np.empty((n, m))
            for s in range(n):
                tpl[s] = np.cos(chirp.symbol_phase(s, p, t))
        else:
            tpl = np.empty((n, m))
            for s in range(n):
                w = chirp.modulate_ideal([s], p)
                if kind == "square-quantized":
                    w = chirp.quantize_toggles(w, p.fosc_hz)
                tpl[s] = w.samples
        tpl = tpl - tpl.mean(axis=1, keepdims=True)
        rms = np.sqrt(np.mean(np.abs(tpl) ** 2, axis=1, keepdims=True))
        self.templates = tpl / rms

    def detection_fraction(self) -> float:
        """Mean dechirp-bin power capture of the scaled templates."""
        m = self.p.samples_per_symbol
        bins = rxdsp.dechirp_bins(self.templates, self.p)
        s = np.arange(self.p.n_bins)
        peak = np.abs(bins[s, s]) ** 2
        return float(np.mean(peak / (m * np.sum(np.abs(self.templates) ** 2, axis=1))))

    def run(
        self,
        ps_w: float,
        n0_w_per_hz: float,
        n_symbols: int,
        seed: int,
        bursts: channel.WBurstModel | None = None,
        batch: int = 4096,
    ) -> rxdsp.BerResult:
        p = self.p
        m = p.samples_per_symbol
        amp = math.sqrt(ps_w)
        sig_rms = amp  # templates are unit-power
        rng = np.random.default_rng(seed)
        sym_err = bit_err = 0
        done = 0
        noise = channel.NoiseModel(n0_w_per_hz)
        while done < n_symbols:
            nb = min(batch, n_symbols - done)
            tx = rng.integers(0, p.n_bins, size=nb)
            x = amp * self.templates[tx]
            if bursts is not None and bursts.amplitude_scale > 0:
                flat = x.reshape(-1)
                if self.complex_noise:
                    flat = flat.view(np.float64)[::2]  # in-place view of the real part
                span = nb * p.ds_s
                nb_s = max(1, int(round(bursts.duration_s * p.fs_hz)))
                template = bursts.amplitude_scale * sig_rms * channel.burst_template(nb_s)
                for t0 in bursts.arrival_times(0.0, span, rng):
                    i = int(round(t0 * p.fs_hz))
                    j = min(i + nb_s, len(flat))
                    if i < len(flat):
                        flat[i:j] += template[: j - i]
            y = noise.add(x, p.fs_hz, rng)
            y = y - y.mean(axis=1, keepdims=True)
            mags = np.abs(rxdsp.dechirp_bins(y, p))
            det = np.argmax(mags, axis=1)
            sym_err += int(np.count_nonzero(det != tx))
            bit_err += rxdsp.bit_errors(tx, det, p.sf)
            done += nb
        nbits = n_symbols * p.sf
        return rxdsp.BerResult(
            n_symbols=n_symbols,
            n_bits=nbits,
            n_symbol_errors=sym_err,
            n_bit_errors=bit_err,
            ser=sym_err / n_symbols,
            ber=bit_err / nbits,
            wilson_95_halfwidth=rxdsp.wilson_halfwidth(bit_err, nbits),
        )


def _engine_params(cfg: ExperimentConfig, fosc_hz: float | None = None) -> chirp.ChirpParams:
    """Simulation-rate params: fs = fosc = 8*bw keeps the FFTs small and legal."""
    fosc = fosc_hz if fosc_hz is not None else cfg.fosc_hz
    return chirp.derive_params(cfg.sf, fosc, fs_hz=fosc)


@dataclass
class SweepRow:
    axis: str
    axis_value: float
    pr_dbm: float
    ps_w: float
    snr_db: float
    n_symbols: int
    ser: float
    ber: float
    wilson95: float
    theory_pb: float
    interference_es: float
    runtime_s: float


def _rows_to_csv(rows, out) -> None:
    names = [f.name for f in fields(rows[0])]
    w = csv.writer(out)
    w.writerow(names)
    for r in rows:
        w.writerow([getattr(r, n) for n in names])


def rows_to_csv_text(rows) -> str:
    buf = io.StringIO()
    _rows_to_csv(rows, buf)
    return buf.getvalue()


def rows_to_json_text(rows) -> str:
    return json.dumps([dataclasses.asdict(r) for r in rows], indent=2) + "\n"


def run_ber_sweep(cfg: ExperimentConfig, table: channel.IncidentPowerTable | None = None) -> list[SweepRow]:
    """Monte-Carlo BER across the configured sweep axis, one seeded row per point."""
    cfg.validate()
    table = table or channel.IncidentPowerTable.default()
    burst_model = channel.WBurstModel(
        cfg.burst_period_s, cfg.burst_duration_s, cfg.burst_amplitude_scale
    )
    bursts = burst_model if cfg.bursts_enabled else None
    rows = []
    engines: dict[float, BerEngine] = {}
    for idx, value in enumerate(cfg.sweep_values):
        fosc = cfg.fosc_hz
        if cfg.sweep_axis == "eirp_dbm":
            pr = table.incident_power_dbm(value, cfg.depth_cm)
        elif cfg.sweep_axis == "depth_cm":
            pr = table.incident_power_dbm(cfg.eirp_dbm, value)
        elif cfg.sweep_axis == "bandwidth_hz":
            fosc = 8.0 * value
            pr = table.incident_power_dbm(cfg.eirp_dbm, cfg.depth_cm)
        else:
            pr = value
        if fosc not in engines:
            engines[fosc] = BerEngine(_engine_params(cfg, fosc), cfg.template)
        eng = engines[fosc]
        p = eng.p
        ps_w = 10.0 ** ((pr + cfg.composite_gain_db - 30.0) / 10.0)
        snr = rxdsp.effective_snr(ps_w, p.bw_hz, cfg.n0_w_per_hz, cfg.detection_fraction)
        t0 = time.perf_counter()
        res = eng.run(ps_w, cfg.n0_w_per_hz, cfg.n_symbols, cfg.base_seed + idx, bursts)
        rows.append(
            SweepRow(
                axis=cfg.sweep_axis,
                axis_value=value,
                pr_dbm=pr,
                ps_w=ps_w,
                snr_db=10.0 * math.log10(snr) if snr > 0 else -math.inf,
                n_symbols=res.n_symbols,
                ser=res.ser,
                ber=res.ber,
                wilson95=res.wilson_95_halfwidth,
                theory_pb=rxdsp.ber_theory(snr, cfg.sf),
                interference_es=channel.interference_symbol_error_rate(p.ds_s, burst_model),
                runtime_s=time.perf_counter() - t0,
            )
        )
    return rows


@dataclass
class ChargeRow:
    pr_dbm: float
    variant: str
    capacitance_f: float
    target_v: float
    time_s: float  # math.inf means the target is unreachable

    @property
    def time_text(self) -> str:
        return "never" if math.isinf(self.time_s) else repr(self.time_s)


def charge_models(cfg: ExperimentConfig) -> tuple[powersim.HarvesterModel, powersim.LeakageCurve]:
    if cfg.charge_variant == "active":
        return (
            powersim.HarvesterModel.default_active().with_scale(cfg.efficiency_scale),
            powersim.LeakageCurve.default_with_startup(),
        )
    return (
        powersim.HarvesterModel.default_passive().with_scale(cfg.efficiency_scale),
        powersim.LeakageCurve.constant(powersim.P_SLEEP_W, "passive_sleep"),
    )


def run_charge_sweep(cfg: ExperimentConfig) -> list[ChargeRow]:
    """Charge time to target voltage at each swept incident power level."""
    cfg.validate()
    harvester, leakage = charge_models(cfg)
    rows = []
    for pr in cfg.sweep_values:
        c = powersim.Capacitor(cfg.capacitance_f)
        t = powersim.time_to_voltage(c, cfg.target_v, pr, harvester, leakage, cfg.dt_s)
        rows.append(ChargeRow(pr, cfg.charge_variant, cfg.capacitance_f, cfg.target_v, t))
    return rows


def fit_passive_efficiency_scale(
    anchor_pr_dbm: float = -2.3,
    anchor_time_s: float = 0.9,
    capacitance_f: float = powersim.DEFAULT_PASSIVE_CAP_F,
    target_v: float = powersim.V_MIN,
    dt_s: float = 5e-4,
) -> float:
    """One-point calibration of the passive harvester efficiency scale.

    Bisects the multiplicative scale so the sim charges the storage cap to the
    target in exactly the measured anchor time.
    """
    base = powersim.HarvesterModel.default_passive()
    leak = powersim.LeakageCurve.constant(powersim.P_SLEEP_W, "passive_sleep")

    def t_of(scale: float) -> float:
        c = powersim.Capacitor(capacitance_f)
        return powersim.time_to_voltage(
            c, target_v, anchor_pr_dbm, base.with_scale(scale), leak, dt_s
        )

    lo, hi = 0.01, 1.0
    if not (t_of(hi) <= anchor_time_s <= t_of(lo)):
        raise CalibrationError(
            f"anchor ({anchor_pr_dbm} dBm -> {anchor_time_s} s) unreachable with scale in [{lo}, {hi}]"
        )
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if t_of(mid) > anchor_time_s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class TheoryRow:
    fosc_hz: float
    bw_hz: float
    ds_s: float
    rd_bps: float
    snr_db: float
    pb: float
    interference_es: float


TABLE_CLOCKS_HZ = (32768.0, 1e6, 2e6, 4e6)


def run_theory_report(cfg: ExperimentConfig, clocks_hz=TABLE_CLOCKS_HZ) -> list[TheoryRow]:
    """Closed-form timing, rate, SNR, BER and burst-hit rate per oscillator clock."""
    cfg.validate()
    table = channel.IncidentPowerTable.default()
    pr = table.incident_power_dbm(cfg.eirp_dbm, cfg.depth_cm)
    ps_w = 10.0 ** ((pr + cfg.composite_gain_db - 30.0) / 10.0)
    burst_model = channel.WBurstModel(
        cfg.burst_period_s, cfg.burst_duration_s, cfg.burst_amplitude_scale
    )
    rows = []
    for fosc in clocks_hz:
        p = chirp.derive_params(cfg.sf, fosc)
        snr = rxdsp.effective_snr(ps_w, p.bw_hz, cfg.n0_w_per_hz, cfg.detection_fraction)
        rows.append(
            TheoryRow(
                fosc_hz=fosc,
                bw_hz=p.bw_hz,
                ds_s=p.ds_s,
                rd_bps=p.rd_bps,
                snr_db=10.0 * math.log10(snr) if snr > 0 else -math.inf,
                pb=rxdsp.ber_theory(snr, cfg.sf),
                interference_es=channel.interference_symbol_error_rate(p.ds_s, burst_model),
            )
        )
    return rows


@dataclass
class CalibrationResult:
    composite_gain_db: float
    anchor_pr_dbm: float
    anchor_ber: float
    achieved_ber: float
    n_symbols: int


def calibrate_composite_gain(
    cfg: ExperimentConfig,
    table: channel.IncidentPowerTable | None = None,
    lo_db: float = -40.0,
    hi_db: float = 120.0,
) -> CalibrationResult:
    """Fit the one free link-budget gain so MC BER matches the anchor point.

    Bisection on the composite gain; BER is monotone decreasing in gain.  Stops
    when the achieved BER sits inside the anchor's Wilson band or the bracket
    closes below 0.02 dB.
    """
    cfg.validate()
    if not 1e-4 < cfg.anchor_ber < 0.4:
        raise CalibrationError(
            f"anchor BER {cfg.anchor_ber} outside the calibratable range (1e-4, 0.4)"
        )
    table = table or channel.IncidentPowerTable.default()
    pr = table.incident_power_dbm(cfg.anchor_eirp_dbm, cfg.depth_cm)
    eng = BerEngine(_engine_params(cfg), cfg.template)
    n = cfg.n_symbols_calibration

    def ber_at(gain_db: float, seed_salt: int) -> float:
        ps = 10.0 ** ((pr + gain_db - 30.0) / 10.0)
        return eng.run(ps, cfg.n0_w_per_hz, n, cfg.base_seed + 7000 + seed_salt).ber

    if ber_at(lo_db, 0) < cfg.anchor_ber or ber_at(hi_db, 1) > cfg.anchor_ber:
        raise CalibrationError(
            f"anchor BER {cfg.anchor_ber} not bracketed by gains [{lo_db}, {hi_db}] dB "
            f"(pr={pr} dBm, n0={cfg.n0_w_per_hz})"
        )
    achieved = math.nan
    it = 0
    while hi_db - lo_db > 0.02:
        it += 1
        mid = 0.5 * (lo_db + hi_db)
        achieved = ber_at(mid, 1 + it)
        k = round(achieved * n * cfg.sf)
        w_lo, w_hi = rxdsp.wilson_interval(k, n * cfg.sf)
        if w_lo <= cfg.anchor_ber <= w_hi:
            return CalibrationResult(mid, pr, cfg.anchor_ber, achieved, n)
        if achieved > cfg.anchor_ber:
            lo_db = mid
        else:
            hi_db = mid
    gain = 0.5 * (lo_db + hi_db)
    return CalibrationResult(gain, pr, cfg.anchor_ber, achieved, n)

"""Command-line front end for the simulator.

Exit codes: 0 success, 2 configuration problem, 3 runtime/calibration failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys

import numpy as np

from . import channel, chirp, harness, rxdsp
from .errors import ConfigurationError, RfsnError
from .waveform import KIND_BINARY, Waveform


def _write_text(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows, fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        _write_text(harness.rows_to_json_text(rows), out_path)
    else:
        _write_text(harness.rows_to_csv_text(rows), out_path)


def _emit_dict(d: dict, fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        _write_text(json.dumps(d, indent=2) + "\n", out_path)
    else:
        lines = ["key,value"] + [f"{k},{v}" for k, v in d.items()]
        _write_text("\n".join(lines) + "\n", out_path)


def _load_cfg(args) -> harness.ExperimentConfig:
    if getattr(args, "config", None):
        cfg = harness.load_config(args.config)
    else:
        cfg = harness.ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.base_seed = args.seed
    return cfg


def _parse_symbols(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad symbol list {text!r}: {exc}") from exc


def _load_waveform(path: str, fs_hz: float) -> Waveform:
    if path.endswith(".csv"):
        return Waveform.from_csv(path, fs_hz=fs_hz, kind="analog")
    return Waveform.load(path)


def cmd_params(args) -> None:
    p = chirp.derive_params(args.sf, args.fosc, args.fs)
    _emit_dict(
        {
            "sf": p.sf,
            "bw_hz": p.bw_hz,
            "fosc_hz": p.fosc_hz,
            "fs_hz": p.fs_hz,
            "ds_s": p.ds_s,
            "rd_bps": p.rd_bps,
            "n_bins": p.n_bins,
            "samples_per_symbol": p.samples_per_symbol,
            "toggle_grid_s": p.toggle_grid_s,
        },
        args.format,
        args.out,
    )


def cmd_modulate(args) -> None:
    p = chirp.derive_params(args.sf, args.fosc, args.fs)
    symbols = _parse_symbols(args.symbols)
    w = chirp.modulate_ideal(symbols, p)
    if args.quantize:
        w = chirp.quantize_toggles(w, p.fosc_hz)
    if not args.out:
        raise ConfigurationError("modulate requires --out (waveform .csv or .bin)")
    if args.out.endswith(".csv"):
        w.to_csv(args.out)
    else:
        w.save(args.out)


def cmd_demodulate(args) -> None:
    p = chirp.derive_params(args.sf, args.fosc, args.fs)
    w = _load_waveform(args.infile, p.fs_hz)
    detected = rxdsp.demodulate_stream(w, p)
    if args.format == "json":
        _write_text(json.dumps([int(s) for s in detected]) + "\n", args.out)
    else:
        _write_text(
            "symbol_index,detected\n"
            + "\n".join(f"{i},{int(s)}" for i, s in enumerate(detected))
            + "\n",
            args.out,
        )


def cmd_spectrum(args) -> None:
    w = _load_waveform(args.infile, args.fs or 0.0)
    ps = chirp.spectrum(w)
    order = np.argsort(ps.freqs_hz)
    _write_text(
        "freq_hz,psd\n"
        + "\n".join(f"{float(ps.freqs_hz[i])!r},{float(ps.psd[i])!r}" for i in order)
        + "\n",
        args.out,
    )


def cmd_ber_sweep(args) -> None:
    cfg = _load_cfg(args)
    _emit_rows(harness.run_ber_sweep(cfg), args.format, args.out)


def cmd_charge_sweep(args) -> None:
    cfg = _load_cfg(args)
    rows = harness.run_charge_sweep(cfg)
    if args.format == "json":
        payload = [
            {**dataclasses.asdict(r), "time_s": None if math.isinf(r.time_s) else r.time_s}
            for r in rows
        ]
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = ["pr_dbm,variant,capacitance_f,target_v,time_s"]
        for r in rows:
            lines.append(
                f"{r.pr_dbm!r},{r.variant},{r.capacitance_f!r},{r.target_v!r},{r.time_text}"
            )
        _write_text("\n".join(lines) + "\n", args.out)


def cmd_theory(args) -> None:
    cfg = _load_cfg(args)
    _emit_rows(harness.run_theory_report(cfg), args.format, args.out)


def cmd_calibrate(args) -> None:
    cfg = _load_cfg(args)
    if args.anchor_eirp is not None:
        cfg.anchor_eirp_dbm = args.anchor_eirp
    if args.anchor_ber is not None:
        cfg.anchor_ber = args.anchor_ber
    res = harness.calibrate_composite_gain(cfg)
    _emit_dict(dataclasses.asdict(res), args.format, args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rfsn", description="Backscatter chirp link and energy-budget simulator"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    def add_chirp_args(sp):
        sp.add_argument("--sf", type=int, default=7)
        sp.add_argument("--fosc", type=float, default=32768.0)
        sp.add_argument("--fs", type=float, default=None)

    def add_cfg_args(sp):
        sp.add_argument("--config", default=None, help="key=value config file")
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("params", help="derived chirp timing and rate parameters")
    add_chirp_args(sp)
    add_common(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("modulate", help="synthesize a square-chirp waveform")
    add_chirp_args(sp)
    sp.add_argument("--symbols", required=True, help="comma-separated symbol values")
    sp.add_argument("--quantize", action="store_true", help="snap toggles to the clock grid")
    sp.add_argument("--out", required=False, default=None)
    sp.set_defaults(func=cmd_modulate, format="csv")

    sp = sub.add_parser("demodulate", help="dechirp a waveform back to symbols")
    add_chirp_args(sp)
    sp.add_argument("--in", dest="infile", required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_demodulate)

    sp = sub.add_parser("spectrum", help="power spectrum of a stored waveform")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--fs", type=float, default=None, help="sample rate for CSV waveforms")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_spectrum, format="csv")

    sp = sub.add_parser("ber-sweep", help="Monte-Carlo BER sweep")
    add_cfg_args(sp)
    add_common(sp)
    sp.set_defaults(func=cmd_ber_sweep)

    sp = sub.add_parser("charge-sweep", help="capacitor charge times vs incident power")
    add_cfg_args(sp)
    add_common(sp)
    sp.set_defaults(func=cmd_charge_sweep)

    sp = sub.add_parser("theory", help="closed-form per-bandwidth report")
    add_cfg_args(sp)
    add_common(sp)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("calibrate", help="fit composite link gain to an anchor BER")
    add_cfg_args(sp)
    sp.add_argument("--anchor-eirp", type=float, default=None)
    sp.add_argument("--anchor-ber", type=float, default=None)
    add_common(sp)
    sp.set_defaults(func=cmd_calibrate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (RfsnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

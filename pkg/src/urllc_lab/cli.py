"""Command-line front end.

Each subcommand runs one reproducible experiment and writes CSV or JSON
artifacts plus a run manifest. With a fixed seed, data outputs are
byte-identical across runs; the manifest (which records wall time) is the
only file that varies.

Exit codes: 0 success (including infeasible but well-posed searches),
2 usage errors, 3 internal numeric failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .constants import carrier_wavelength
from .fading import (
    empirical_covariance,
    empirical_energy_cdf,
    theoretical_covariance,
    within_packet_variation,
)
from .gp import (
    GpChannelPredictor,
    PastWindow,
    coherence_distance,
    energy_exceedance,
    misprediction_probability,
)
from .mc import SCENARIO_AXES, sweep
from .protocol import (
    Dynamics,
    ProtocolConfig,
    Scheme,
    UncertaintyBudget,
    max_tolerable_plink,
    min_snr,
    robust_cycle_outage,
    snr_for_link_outage,
    spectral_efficiency,
)
from .special import rayleigh_energy_cdf
from .spectrum import energy_bandwidth, psd_estimate

SEED_ENV_VAR = "URLLC_LAB_SEED"


def fmt_prob(p: float) -> str:
    return f"{p:.5e}"


def fmt_db(x: float) -> str:
    return f"{x:.2f}"


def _resolve_seed(args) -> int:
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env is not None else args.seed


def _config_hash(command: str, args: argparse.Namespace) -> str:
    skip = {"output", "threads", "func", "timing"}
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    payload["command"] = command
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_manifest(command, args, outputs, started):
    import scipy

    manifest = {
        "command": [command] + [f"{k}={v}" for k, v in sorted(vars(args).items()) if k != "func"],
        "config_hash": _config_hash(command, args),
        "master_seed": _resolve_seed(args),
        "versions": {
            "urllc-lab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "wall_seconds": round(time.perf_counter() - started, 3),
        "outputs": outputs,
    }
    for path in outputs:
        if not (os.path.exists(path) and os.path.getsize(path) > 0):
            raise RuntimeError(f"declared output {path} is missing or empty")
    path = args.output + ".manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)


def _write_csv(path, header_comments, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in header_comments:
            f.write(f"# {line}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


# --- fading ------------------------------------------------------------------


def cmd_fading_cdf(args):
    seed = _resolve_seed(args)
    table = empirical_energy_cdf(args.n, args.samples, seed, args.room, args.fc)
    idx = np.unique(
        np.clip((np.linspace(0, 1, args.points) * (args.samples - 1)).astype(int), 0, None)
    )
    comments = [
        f"empirical channel-energy CDF: n_scatterers={args.n} samples={args.samples} "
        f"room={args.room}m fc={args.fc:g}Hz seed={seed}"
    ]
    if args.n == 2:
        comments.append(
            "warning: two-scatterer environments fade along null valleys; deep fades are "
            "several times more likely than the Rayleigh reference"
        )
    rows = [
        (fmt_prob(table.values[i]), fmt_prob(table.cdf[i]), fmt_prob(rayleigh_energy_cdf(table.values[i])))
        for i in idx
    ]
    _write_csv(args.output, comments, ["energy_linear", "cdf_empirical", "cdf_rayleigh"], rows)
    return [args.output]


def cmd_fading_covariance(args):
    seed = _resolve_seed(args)
    lags = np.linspace(0.0, args.max_lag_wl, args.points + 1)[1:]
    lags_out, cov = empirical_covariance(args.speed, args.fc, lags, args.trials, args.n, seed)
    lam = carrier_wavelength(args.fc)
    theory = theoretical_covariance(args.speed, lags_out * lam / args.speed, lam)
    comments = [
        f"fading cross-covariance vs distance: n_scatterers={args.n} v={args.speed}m/s "
        f"fc={args.fc:g}Hz environments={args.trials} seed={seed}"
    ]
    rows = [
        (f"{lag:.6f}", fmt_prob(abs(c)), fmt_prob(abs(t)))
        for lag, c, t in zip(lags_out, cov, theory)
    ]
    _write_csv(
        args.output,
        comments,
        ["distance_wavelengths", "crosscov_abs_empirical", "crosscov_abs_theory"],
        rows,
    )
    return [args.output]


def cmd_fading_psd(args):
    seed = _resolve_seed(args)
    spec = psd_estimate(
        args.speed,
        args.fc,
        args.duration,
        args.sample_rate,
        n_traces=args.traces,
        n_scatterers=args.n,
        seed=seed,
        window=args.window,
    )
    lam = carrier_wavelength(args.fc)
    comments = [
        f"one-sided fading PSD: v={args.speed}m/s fc={args.fc:g}Hz duration={args.duration}s "
        f"sample_rate={args.sample_rate:g}Hz traces={args.traces} window={args.window} seed={seed}",
        f"doppler_edge_cpm={1.0 / lam:.6f} total_energy={spec.total_energy!r}",
    ]
    rows = [
        (f"{fc:.6f}", f"{fc * args.speed:.6f}", fmt_prob(max(p, 0.0)))
        for fc, p in zip(spec.frequencies, spec.power_density)
    ]
    _write_csv(
        args.output, comments, ["frequency_cpm", "frequency_hz", "psd_per_cpm"], rows
    )
    return [args.output]


def cmd_fading_bandwidth(args):
    seed = _resolve_seed(args)
    speeds = [float(s) for s in args.speeds.split(",")]
    fractions = [float(s) for s in args.fractions.split(",")]
    lam = carrier_wavelength(args.fc)
    rows = []
    for i, v in enumerate(speeds):
        duration = args.trace_wavelengths * lam / v
        fs = args.samples_per_wavelength * v / lam
        spec = psd_estimate(
            v, args.fc, duration, fs, n_traces=args.traces, n_scatterers=args.n, seed=seed + i
        )
        for frac in fractions:
            bw = energy_bandwidth(spec, frac)
            rows.append((f"{v:g}", f"{frac:g}", f"{bw:.6f}", f"{bw * v:.6f}"))
    comments = [
        f"energy bandwidth of the fading process: fc={args.fc:g}Hz "
        f"trace={args.trace_wavelengths} wavelengths, {args.samples_per_wavelength} samples/wavelength, "
        f"traces={args.traces} seed={seed}"
    ]
    _write_csv(
        args.output,
        comments,
        ["speed_mps", "energy_fraction", "bandwidth_cpm", "bandwidth_hz"],
        rows,
    )
    return [args.output]


def cmd_fading_packet_variation(args):
    seed = _resolve_seed(args)
    lam = carrier_wavelength(args.fc)
    result = within_packet_variation(
        args.speed,
        lam,
        args.packet_us * 1e-6,
        good_threshold_db=args.threshold_db,
        n_trials=args.trials,
        seed=seed,
    )
    grid, ccdf_all, ccdf_good = result.ccdf_tables()
    comments = [
        f"within-packet max/min energy ratio CCDF: packet={args.packet_us}us v={args.speed}m/s "
        f"fc={args.fc:g}Hz trials={args.trials} good_threshold={fmt_db(args.threshold_db)}dB seed={seed}"
    ]
    rows = [
        (fmt_db(g), fmt_prob(a), fmt_prob(c)) for g, a, c in zip(grid, ccdf_all, ccdf_good)
    ]
    _write_csv(args.output, comments, ["ratio_db", "ccdf_all", "ccdf_good_start"], rows)
    return [args.output]


# --- predict -----------------------------------------------------------------


def cmd_predict_distribution(args):
    from .fading import ChannelTrace

    trace = ChannelTrace.from_csv(args.trace)
    lam = carrier_wavelength(args.fc)
    pred = GpChannelPredictor(args.speed, lam).fit(trace.times, trace.coefficients).predict(
        args.at
    )
    record = {
        "t_future_s": args.at,
        "mu_i": pred.mu_i,
        "mu_q": pred.mu_q,
        "sigma_sq": pred.sigma_sq,
        "nu": pred.nu,
    }
    if args.threshold is not None:
        record["exceedance_probability"] = energy_exceedance(pred, args.threshold)
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    return [args.output]


def cmd_predict_misprediction(args):
    seed = _resolve_seed(args)
    sampling = PastWindow(window_s=args.past_ms * 1e-3, spacing_s=args.sample_ms * 1e-3)
    if args.horizons:
        horizons = [float(h) for h in args.horizons.split(",")]
    else:
        horizons = list(np.logspace(-3, 0, 13))
    rows = []
    for i, h in enumerate(horizons):
        est = misprediction_probability(
            args.snr_db,
            h,
            v=args.speed,
            carrier_freq=args.fc,
            sampling=sampling,
            rate=args.rate,
            n_trials=args.trials,
            seed=seed + i,
        )
        rows.append(
            (f"{h:.6f}", fmt_prob(est.error_rate), fmt_prob(est.ci_low), fmt_prob(est.ci_high))
        )
    comments = [
        f"channel-quality misprediction vs horizon: snr={fmt_db(args.snr_db)}dB rate={args.rate} "
        f"past={args.past_ms}ms/{args.sample_ms}ms v={args.speed}m/s fc={args.fc:g}Hz "
        f"trials={args.trials} seed={seed}"
    ]
    _write_csv(
        args.output,
        comments,
        ["horizon_wavelengths", "misprediction", "ci_low", "ci_high"],
        rows,
    )
    return [args.output]


def cmd_predict_coherence(args):
    seed = _resolve_seed(args)
    sampling = PastWindow(window_s=args.past_ms * 1e-3, spacing_s=args.sample_ms * 1e-3)
    lam = carrier_wavelength(args.fc)
    distance = coherence_distance(
        args.reliability,
        args.snr_db,
        v=args.speed,
        carrier_freq=args.fc,
        sampling=sampling,
        rate=args.rate,
        n_trials=args.trials,
        seed=seed,
    )
    record = {
        "reliability": args.reliability,
        "snr_db": args.snr_db,
        "distance_m": distance,
        "distance_wavelengths": distance / lam,
    }
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    return [args.output]


# --- protocol ----------------------------------------------------------------


def _protocol_config(args, dynamics=Dynamics.QUASI_STATIC) -> ProtocolConfig:
    return ProtocolConfig(
        scheme=Scheme(args.scheme),
        n=args.nodes,
        message_bits=args.message_bits,
        cycle_time=args.cycle_ms * 1e-3,
        bandwidth=args.bandwidth_hz,
        k1=args.k1,
        k2=args.k2,
        dynamics=dynamics,
    )


def cmd_protocol_outage(args):
    cfg = _protocol_config(args)
    budget = UncertaintyBudget(p_off=args.poff, p_c=args.pc, p_g=args.pg)
    report = robust_cycle_outage(cfg, args.snr_db, budget)
    record = {
        "scheme": cfg.scheme.value,
        "n": cfg.n,
        "snr_db": args.snr_db,
        "k1": cfg.k1,
        "k2": cfg.k2,
        "p_off": budget.p_off,
        "p_c": budget.p_c,
        "p_g": budget.p_g,
        "spectral_efficiency": report.spectral_efficiency,
        "p_link": report.p_link,
        "p_fail": report.p_fail,
        "breakdown": dict(report.breakdown),
        "cycle_time_s": cfg.cycle_time,
        "cycle_time_is_default": args.cycle_ms == 2.0,
    }
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    return [args.output]


def cmd_protocol_tolerable_plink(args):
    rows = []
    rate_cfg = ProtocolConfig(
        scheme=Scheme(args.scheme),
        n=args.n_min,
        message_bits=args.message_bits,
        cycle_time=args.cycle_ms * 1e-3,
        bandwidth=args.bandwidth_hz,
    )
    for n in range(args.n_min, args.n_max + 1):
        p_max = max_tolerable_plink(n, args.target)
        p_w_allowed = max(0.0, p_max - args.poff)
        rate = spectral_efficiency(
            ProtocolConfig(
                scheme=rate_cfg.scheme,
                n=n,
                message_bits=args.message_bits,
                cycle_time=args.cycle_ms * 1e-3,
                bandwidth=args.bandwidth_hz,
            )
        )
        snr_needed = (
            fmt_db(10 * np.log10(snr_for_link_outage(p_w_allowed, rate)))
            if 0.0 < p_w_allowed < 1.0
            else ""
        )
        rows.append((str(n), fmt_prob(p_max), fmt_prob(p_w_allowed), snr_needed))
    comments = [
        f"max tolerable link failure vs nodes: target={fmt_prob(args.target)} "
        f"p_off={fmt_prob(args.poff)} scheme={args.scheme} m={args.message_bits} "
        f"T={args.cycle_ms}ms W={args.bandwidth_hz:g}Hz",
        "snr_db_needed is the nominal SNR whose fading outage equals p_w_allowed",
    ]
    _write_csv(
        args.output,
        comments,
        ["n", "p_link_max", "p_w_allowed", "snr_db_needed"],
        rows,
    )
    return [args.output]


def cmd_protocol_min_snr(args):
    cfg = _protocol_config(args)
    budget = UncertaintyBudget(p_off=args.poff, p_c=args.pc, p_g=args.pg)
    result = min_snr(
        cfg,
        budget,
        args.target,
        k1_range=range(1, args.k_max + 1),
        k2_range=range(1, args.k_max + 1),
    )
    record = result.as_dict()
    record.update(
        {
            "scheme": cfg.scheme.value,
            "n": cfg.n,
            "p_off": budget.p_off,
            "p_c": budget.p_c,
            "p_g": budget.p_g,
            "cycle_time_s": cfg.cycle_time,
            "cycle_time_is_default": args.cycle_ms == 2.0,
        }
    )
    if record["snr_db"] is not None:
        record["snr_db"] = round(record["snr_db"], 2)
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    return [args.output]


def cmd_protocol_sweep(args):
    seed_override = os.environ.get(SEED_ENV_VAR)
    with open(args.scenario, encoding="utf-8") as f:
        scenario = json.load(f)
    if seed_override is not None:
        scenario["seed"] = int(seed_override)

    rows = list(sweep(scenario)) if args.threads <= 1 else _sweep_parallel(scenario, args.threads)

    columns = [
        "scheme",
        "n",
        "snr_db",
        "p_off",
        "p_c",
        "p_g",
        "k1",
        "k2",
        "cap",
        "q",
        "dynamics",
        "p_hat",
        "failures",
        "trials",
        "ci_low",
        "ci_high",
    ]
    if args.timing:
        columns.append("wall_seconds")
    if args.validate_mc:
        columns += ["p_analytic", "within_ci"]
    out_rows = []
    for row in rows:
        values = []
        for col in columns[: 16 + (1 if args.timing else 0)]:
            val = row.get(col)
            if col in {"p_hat", "ci_low", "ci_high", "p_off", "p_c", "p_g", "q"}:
                values.append("" if val is None else fmt_prob(val))
            elif col == "snr_db":
                values.append(fmt_db(val))
            elif col == "wall_seconds":
                values.append(f"{val:.3f}")
            else:
                values.append("" if val is None else str(val))
        if args.validate_mc:
            analytic = _analytic_for_row(scenario, row)
            if analytic is None:
                values += ["", ""]
            else:
                inside = row["ci_low"] <= analytic <= row["ci_high"]
                values += [fmt_prob(analytic), str(inside)]
        out_rows.append(tuple(values))
    comments = [f"protocol outage sweep: scenario={os.path.basename(args.scenario)}"]
    comments += [f"scenario.{k}={json.dumps(scenario[k], sort_keys=True)}" for k in sorted(scenario)]
    _write_csv(args.output, comments, columns, out_rows)
    return [args.output]


def _sweep_parallel(scenario, threads):
    """Evaluate grid points concurrently, in grid order.

    Each point becomes a single-point scenario carrying the seed the serial
    sweep would have used, so threaded and serial runs are byte-identical.
    """
    import itertools

    axes = dict(scenario.get("axes", {}))
    names = [n for n in SCENARIO_AXES if n in axes]
    combos = list(itertools.product(*(axes[n] for n in names)))
    base_seed = int(scenario.get("seed", 0))

    def run_point(item):
        index, combo = item
        single = dict(scenario)
        single["axes"] = {n: [v] for n, v in zip(names, combo)}
        single["seed"] = base_seed + index
        (row,) = sweep(single)
        return row

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_point, enumerate(combos)))


def _analytic_for_row(scenario, row):
    if row["dynamics"] != Dynamics.QUASI_STATIC.value or row["cap"] is not None or row["q"] is not None:
        return None
    base = dict(scenario.get("base", {}))
    cfg = ProtocolConfig(
        scheme=row["scheme"],
        n=row["n"],
        message_bits=base.get("message_bits", 160.0),
        cycle_time=base.get("cycle_time", 2e-3),
        bandwidth=base.get("bandwidth", 20e6),
        k1=row["k1"],
        k2=row["k2"],
    )
    budget = UncertaintyBudget(p_off=row["p_off"], p_c=row["p_c"], p_g=row["p_g"])
    return robust_cycle_outage(cfg, row["snr_db"], budget).p_fail


# --- parser ------------------------------------------------------------------


def _add_common(p, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default, help="master seed (env URLLC_LAB_SEED overrides)")
    p.add_argument("--output", required=True, help="output file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urllc-lab",
        description=(
            "Fading-channel simulation, channel-quality prediction, and cooperative-"
            "relaying reliability experiments"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="group", required=True)

    fading = sub.add_parser("fading", help="scatterer fading-process experiments")
    fsub = fading.add_subparsers(dest="command", required=True)

    p = fsub.add_parser("cdf", help="empirical channel-energy CDF vs the Rayleigh reference")
    p.add_argument("--n", type=int, required=True, help="number of scatterers")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--room", type=float, default=20.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--points", type=int, default=1024, help="rows written")
    _add_common(p)
    p.set_defaults(func=cmd_fading_cdf)

    p = fsub.add_parser("covariance", help="cross-covariance vs distance with the closed form")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--max-lag-wl", type=float, default=1.0)
    p.add_argument("--points", type=int, default=32)
    _add_common(p)
    p.set_defaults(func=cmd_fading_covariance)

    p = fsub.add_parser("psd", help="one-sided power spectral density of the fading process")
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--sample-rate", type=float, default=32768.0)
    p.add_argument("--traces", type=int, default=64)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--window", default="boxcar")
    _add_common(p)
    p.set_defaults(func=cmd_fading_psd)

    p = fsub.add_parser("bandwidth", help="energy bandwidth vs speed and energy fraction")
    p.add_argument("--speeds", default="5,10,20")
    p.add_argument("--fractions", default="0.99,0.999,0.9999")
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--trace-wavelengths", type=float, default=100.0)
    p.add_argument("--samples-per-wavelength", type=float, default=128.0)
    p.add_argument("--traces", type=int, default=64)
    p.add_argument("--n", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_fading_bandwidth)

    p = fsub.add_parser("packet-variation", help="within-packet energy swing CCDFs")
    p.add_argument("--packet-us", type=float, required=True)
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--threshold-db", type=float, default=-7.0)
    p.add_argument("--trials", type=int, default=20_000)
    _add_common(p)
    p.set_defaults(func=cmd_fading_packet_variation)

    predict = sub.add_parser("predict", help="channel-quality prediction experiments")
    psub = predict.add_subparsers(dest="command", required=True)

    p = psub.add_parser("distribution", help="conditional future-channel distribution for a trace")
    p.add_argument("--trace", required=True, help="CSV with time_s,h_real,h_imag")
    p.add_argument("--at", type=float, required=True, help="future time (s)")
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--threshold", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict_distribution)

    p = psub.add_parser("misprediction", help="misclassification rate vs prediction horizon")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--past-ms", type=float, default=3.0)
    p.add_argument("--sample-ms", type=float, default=1.0)
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--horizons", default="", help="comma list of horizons in wavelengths")
    _add_common(p)
    p.set_defaults(func=cmd_predict_misprediction)

    p = psub.add_parser("coherence", help="distance predictable to a target reliability")
    p.add_argument("--reliability", type=float, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--past-ms", type=float, default=3.0)
    p.add_argument("--sample-ms", type=float, default=1.0)
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=3e9)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=50_000)
    _add_common(p)
    p.set_defaults(func=cmd_predict_coherence)

    protocol = sub.add_parser("protocol", help="cooperative-relaying reliability analysis")
    prsub = protocol.add_subparsers(dest="command", required=True)

    def add_protocol_common(p):
        p.add_argument("--scheme", choices=[s.value for s in Scheme], default="occupy")
        p.add_argument("--nodes", type=int, required=True)
        p.add_argument("--message-bits", type=float, default=160.0)
        p.add_argument("--cycle-ms", type=float, default=2.0)
        p.add_argument("--bandwidth-hz", type=float, default=20e6)
        p.add_argument("--poff", type=float, default=0.0)
        p.add_argument("--pc", type=float, default=0.0)
        p.add_argument("--pg", type=float, default=0.0)

    p = prsub.add_parser("outage", help="analytic cycle-failure probability")
    add_protocol_common(p)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--k1", type=int, default=1)
    p.add_argument("--k2", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_protocol_outage)

    p = prsub.add_parser("tolerable-plink", help="max tolerable link failure vs node count")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--poff", type=float, default=0.0)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="occupy")
    p.add_argument("--message-bits", type=float, default=160.0)
    p.add_argument("--cycle-ms", type=float, default=2.0)
    p.add_argument("--bandwidth-hz", type=float, default=20e6)
    _add_common(p)
    p.set_defaults(func=cmd_protocol_tolerable_plink)

    p = prsub.add_parser("min-snr", help="minimum SNR and repetitions meeting a target")
    add_protocol_common(p)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--k1", type=int, default=1, help=argparse.SUPPRESS)
    p.add_argument("--k2", type=int, default=1, help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_protocol_min_snr)

    p = prsub.add_parser("sweep", help="Monte Carlo outage over a scenario grid")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--validate-mc", action="store_true", help="add analytic column and CI flag")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall_seconds column")
    _add_common(p)
    p.set_defaults(func=cmd_protocol_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        outputs = args.func(args)
        command = f"{args.group} {args.command}"
        _write_manifest(command, args, outputs, started)
    except (ValueError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: simulate, infer-mh, fit-ls, train-nn, rir, distance,
localize, compare. Option precedence is CLI flag > config file (--config,
JSON or TOML) > built-in default, and every command dumps its fully
resolved configuration next to its outputs so a run can be reproduced
from the output directory alone.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bayes, lsq, neural, reloc, rir as rir_mod, synth
from .errors import (
    AcoupropError,
    InvalidInputError,
    MissingFileError,
    NoFixError,
    OverflowRangeError,
    TrainingDivergedError,
)
from .spectral import Signal, dft, idft, write_signal
from .wavemodel import PropagationCoefficient

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _resolve(args: argparse.Namespace, file_config: dict, defaults: dict) -> dict:
    """CLI flag > config file > default, for every key in defaults."""
    resolved = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in file_config:
            resolved[key] = file_config[key]
        else:
            resolved[key] = default
    return resolved


def _dump_config(out_dir: Path, command: str, resolved: dict) -> None:
    doc = {"command": command, **resolved}
    with open(out_dir / f"config.{command}.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")


def _out_dir(resolved: dict) -> Path:
    out = Path(resolved["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _positions_csv(value):
    if value is None:
        return None
    return [float(v) for v in value.split(",")]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "out": "simulated",
    "seed": 0,
    "n_receivers": 9,
    "n_samples": 256,
    "sample_rate": 16000,
    "profile": "air_like",
    "alpha_value": 1.5,
    "noise_std": 0.0,
    "format": "csv",
    "min_distance": 0.5,
    "max_distance": 8.0,
}


def cmd_simulate(args, file_config) -> int:
    resolved = _resolve(args, file_config, SIMULATE_DEFAULTS)
    out = _out_dir(resolved)
    seed = int(resolved["seed"])
    n = int(resolved["n_samples"])
    rate = int(resolved["sample_rate"])
    fmt = resolved["format"]
    if fmt not in ("csv", "wav"):
        print(f"error: unknown format {fmt!r} (use csv or wav)", file=sys.stderr)
        return EXIT_USAGE

    rng = np.random.default_rng(seed)
    speaker_pos = np.zeros(3)
    speaker = Signal(0.1 * rng.standard_normal(n), rate, speaker_pos)
    grid = dft(speaker).angular_frequencies
    gamma = synth.make_gamma(resolved["profile"], grid, alpha_value=float(resolved["alpha_value"]))

    ext = ".wav" if fmt == "wav" else ".csv"
    write_signal(out / f"speaker{ext}", speaker)
    pairs = []
    lo, hi = float(resolved["min_distance"]), float(resolved["max_distance"])
    for i in range(int(resolved["n_receivers"])):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        distance = lo + (hi - lo) * rng.uniform()
        receiver_pos = speaker_pos + distance * direction
        _, receiver_spec = synth.simulate_pair(
            speaker, gamma, distance, float(resolved["noise_std"]),
            seed=int(rng.integers(0, 2**63 - 1)), noise_domain="time",
        )
        receiver = idft(receiver_spec)
        name = f"receiver_{i:02d}{ext}"
        write_signal(out / name, Signal(receiver.samples, rate, receiver_pos))
        pairs.append({
            "speaker": f"speaker{ext}",
            "receiver": name,
            "speaker_pos": [float(v) for v in speaker_pos],
            "receiver_pos": [float(v) for v in receiver_pos],
        })
    synth.write_manifest(out / "manifest.json", pairs, rate)
    gamma.to_json(out / "gamma_true.json")
    with open(out / "ground_truth.json", "w") as fh:
        json.dump({"noise_std": float(resolved["noise_std"]),
                   "noise_domain": "time", "profile": resolved["profile"]}, fh, indent=1)
        fh.write("\n")
    _dump_config(out, "simulate", resolved)
    print(f"wrote {len(pairs)} pairs to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# infer-mh
# ---------------------------------------------------------------------------

INFER_DEFAULTS = {
    "out": "mh",
    "manifest": None,
    "seed": 0,
    "iterations": 1000,
    "chains": 2,
    "warmup": 600,
    "alpha_mean": 1.0,
    "alpha_std": 1.0,
    "kappa_mean": 0.0,
    "kappa_std": 10.0,
    "sigma_scale": 1.0,
    "proposal_std_alpha": 0.1,
    "proposal_std_kappa": 1.0,
    "proposal_std_sigma": 0.1,
    "lhs_mode": "off",
    "lhs_param": None,
    "sigma_fixed": None,
    "update": "per-bin",
    "pair_indices": None,
}


def cmd_infer_mh(args, file_config) -> int:
    resolved = _resolve(args, file_config, INFER_DEFAULTS)
    if resolved["manifest"] is None:
        print("error: --manifest is required", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(resolved)
    dataset = synth.load_dataset(resolved["manifest"])
    if resolved["pair_indices"] is not None:
        indices = [int(i) for i in str(resolved["pair_indices"]).split(",")]
        dataset = dataset.subset(indices)
    prior = bayes.PriorSpec(
        alpha_mean=float(resolved["alpha_mean"]), alpha_std=float(resolved["alpha_std"]),
        kappa_mean=float(resolved["kappa_mean"]), kappa_std=float(resolved["kappa_std"]),
        sigma_scale=float(resolved["sigma_scale"]),
    )
    config = bayes.MHConfig(
        n_iterations=int(resolved["iterations"]), n_chains=int(resolved["chains"]),
        warmup=int(resolved["warmup"]),
        proposal_std_alpha=float(resolved["proposal_std_alpha"]),
        proposal_std_kappa=float(resolved["proposal_std_kappa"]),
        proposal_std_sigma=float(resolved["proposal_std_sigma"]),
        lhs_mode=resolved["lhs_mode"],
        lhs_param=None if resolved["lhs_param"] is None else float(resolved["lhs_param"]),
        seed=int(resolved["seed"]),
        sigma_fixed=None if resolved["sigma_fixed"] is None else float(resolved["sigma_fixed"]),
        update=resolved["update"],
    )
    trace = bayes.mh_sample(dataset, prior, config)
    summary = bayes.summarize(trace)
    bayes.export_trace_csv(trace, out / "trace.csv")
    bayes.export_summary_csv(summary, out / "summary.csv")
    bayes.export_summary_json(summary, out / "summary.json")

    n = trace.n_bins
    grid = dataset.angular_frequencies
    gamma_mean = PropagationCoefficient(summary.mean[:n], summary.mean[n:2 * n], grid)
    gamma_map = PropagationCoefficient(summary.mode[:n], summary.mode[n:2 * n], grid)
    gamma_mean.to_json(out / "gamma_mh_mean.json")
    gamma_map.to_json(out / "gamma_mh_map.json")
    _dump_config(out, "infer-mh", resolved)
    print(f"sampled {trace.n_chains} chains x {trace.n_kept} kept iterations "
          f"({n} bins); mean acceptance {trace.accept_rate.mean():.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit-ls
# ---------------------------------------------------------------------------

FIT_DEFAULTS = {
    "out": "ls",
    "manifest": None,
    "pair_indices": None,
}


def cmd_fit_ls(args, file_config) -> int:
    resolved = _resolve(args, file_config, FIT_DEFAULTS)
    if resolved["manifest"] is None:
        print("error: --manifest is required", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(resolved)
    dataset = synth.load_dataset(resolved["manifest"])
    if resolved["pair_indices"] is not None:
        indices = [int(i) for i in str(resolved["pair_indices"]).split(",")]
        dataset = dataset.subset(indices)
    estimate = lsq.fit(dataset)
    estimate.gamma_mean.to_json(out / "gamma_ls.json")
    estimate.gamma_mean.to_csv(out / "gamma_ls.csv")
    lsq.export_rows_csv(estimate, out / "rows_alpha.csv", out / "rows_kappa.csv")
    report = {
        "n_pairs": len(dataset),
        "n_masked_bins": estimate.n_masked_bins,
        "residual": lsq.residual(dataset, estimate),
    }
    with open(out / "fit_report.json", "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    _dump_config(out, "fit-ls", resolved)
    print(f"fit {len(dataset)} pairs; residual {report['residual']:.6g}, "
          f"{estimate.n_masked_bins} masked bins")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train-nn
# ---------------------------------------------------------------------------

TRAIN_DEFAULTS = {
    "out": "nn",
    "manifest": None,
    "seed": 0,
    "epochs": 500,
    "learning_rate": 1e-4,
    "optimizer": "rmsprop",
    "hidden": "128,256,256,128",
    "variant": "mlp",
    "loss_weights": "1,1,1",
    "ensemble_k": 1,
    "pair_indices": None,
}


def cmd_train_nn(args, file_config) -> int:
    resolved = _resolve(args, file_config, TRAIN_DEFAULTS)
    if resolved["manifest"] is None:
        print("error: --manifest is required", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(resolved)
    dataset = synth.load_dataset(resolved["manifest"])
    if resolved["pair_indices"] is not None:
        indices = [int(i) for i in str(resolved["pair_indices"]).split(",")]
        dataset = dataset.subset(indices)
    width = 2 * dataset.n_bins
    if resolved["hidden"]:
        hidden = [int(h) for h in str(resolved["hidden"]).split(",")]
        layers = (width, *hidden, width)
    else:
        layers = neural.default_layer_sizes(dataset.n_bins, resolved["variant"])
    weights = tuple(float(w) for w in str(resolved["loss_weights"]).split(","))
    spec = neural.NetworkSpec(layers, variant=resolved["variant"], seed=int(resolved["seed"]))
    config = neural.TrainConfig(
        epochs=int(resolved["epochs"]), learning_rate=float(resolved["learning_rate"]),
        optimizer=resolved["optimizer"], loss_weights=weights,
        ensemble_k=int(resolved["ensemble_k"]), seed=int(resolved["seed"]),
    )

    if config.ensemble_k >= 2:
        ensemble = neural.train_ensemble(dataset, spec, config)
        ensemble.gamma_mean.to_json(out / "gamma_nn.json")
        with open(out / "ensemble_report.json", "w") as fh:
            json.dump({
                "members": config.ensemble_k,
                "alpha_std_mean": float(ensemble.alpha_std.mean()),
                "kappa_std_mean": float(ensemble.kappa_std.mean()),
            }, fh, indent=1)
            fh.write("\n")
        for i, member in enumerate(ensemble.members):
            member.to_json(out / f"weights_member_{i:02d}.json")
        print(f"trained {config.ensemble_k} ensemble members on {len(dataset)} pairs")
    else:
        result = neural.train(dataset, spec, config)
        result.network.to_json(out / "weights.json")
        neural.export_history_csv(result, out / "loss_history.csv")
        outputs = result.network.forward_batch(
            np.stack([neural.spectrum_to_input(s) for s in dataset.speaker_spectra])
        )
        n = dataset.n_bins
        gamma = PropagationCoefficient(
            outputs[:, :n].mean(axis=0), outputs[:, n:].mean(axis=0),
            dataset.angular_frequencies,
        )
        gamma.to_json(out / "gamma_nn.json")
        best_so_far = np.minimum.accumulate(result.history[:, 0])
        report = {
            "initial_loss": float(result.initial_loss),
            "final_loss": float(result.final_loss),
            "loss_ratio": float(result.final_loss / result.initial_loss)
            if result.initial_loss > 0 else 0.0,
            "monotone_trend": bool(
                np.all(np.diff(best_so_far) <= 1e-12 * max(1.0, result.initial_loss))
            ),
        }
        with open(out / "train_report.json", "w") as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
        print(f"trained {config.epochs} epochs; loss {result.initial_loss:.6g} -> "
              f"{result.final_loss:.6g}")
    _dump_config(out, "train-nn", resolved)
    return EXIT_OK


# ---------------------------------------------------------------------------
# rir
# ---------------------------------------------------------------------------

RIR_DEFAULTS = {
    "out": "rir",
    "gamma": None,
    "delta_x": None,
    "manifest": None,
    "pair_index": 0,
    "sample_rate": 16000,
}


def cmd_rir(args, file_config) -> int:
    resolved = _resolve(args, file_config, RIR_DEFAULTS)
    out = _out_dir(resolved)
    if resolved["manifest"] is not None:
        dataset = synth.load_dataset(resolved["manifest"])
        i = int(resolved["pair_index"])
        pair = (dataset.speaker_spectra[i], dataset.receiver_spectra[i])
        estimate = rir_mod.rir_from_measurements(pair)
        grid = dataset.angular_frequencies
        rate = int(round(dataset.speaker_spectra[i].sample_rate))
    elif resolved["gamma"] is not None and resolved["delta_x"] is not None:
        gamma = PropagationCoefficient.from_json(resolved["gamma"])
        estimate = rir_mod.rir_from_gamma(gamma, float(resolved["delta_x"]))
        grid = gamma.angular_frequencies
        rate = int(resolved["sample_rate"])
    else:
        print("error: need either --manifest or (--gamma and --delta-x)", file=sys.stderr)
        return EXIT_USAGE
    rir_mod.export_csv(estimate, out / "rir.csv", grid)
    rir_mod.export_wav(estimate, out / "rir.wav", rate)
    _dump_config(out, "rir", resolved)
    print(f"wrote impulse response ({len(estimate)} bins, delta_x={estimate.delta_x:.6g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------

DISTANCE_DEFAULTS = {
    "out": "distance",
    "manifest": None,
    "gamma": None,
    "pair_index": 0,
    "mode": "magnitude_only",
}


def cmd_distance(args, file_config) -> int:
    resolved = _resolve(args, file_config, DISTANCE_DEFAULTS)
    if resolved["manifest"] is None or resolved["gamma"] is None:
        print("error: --manifest and --gamma are required", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(resolved)
    dataset = synth.load_dataset(resolved["manifest"])
    gamma = PropagationCoefficient.from_json(resolved["gamma"])
    i = int(resolved["pair_index"])
    estimate = reloc.estimate_distance(
        (dataset.speaker_spectra[i], dataset.receiver_spectra[i]), gamma, resolved["mode"]
    )
    doc = estimate.to_dict()
    doc["true_delta_x"] = float(dataset.delta_x[i])
    with open(out / "distance.json", "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    _dump_config(out, "distance", resolved)
    print(f"pair {i}: mean {estimate.mean:.4f} m, mode {estimate.mode:.4f} m, "
          f"std {estimate.std:.4f} m (truth {dataset.delta_x[i]:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# localize
# ---------------------------------------------------------------------------

LOCALIZE_DEFAULTS = {
    "out": "localize",
    "anchors": None,
    "manifest": None,
    "gamma": None,
    "mode": "magnitude_only",
    "dim": 3,
    "seed": 0,
}


def cmd_localize(args, file_config) -> int:
    resolved = _resolve(args, file_config, LOCALIZE_DEFAULTS)
    out = _out_dir(resolved)
    dim = int(resolved["dim"])
    if resolved["anchors"] is not None:
        anchors = reloc.load_anchors(resolved["anchors"])
    elif resolved["manifest"] is not None and resolved["gamma"] is not None:
        dataset = synth.load_dataset(resolved["manifest"])
        gamma = PropagationCoefficient.from_json(resolved["gamma"])
        anchors = []
        for i in range(len(dataset)):
            estimate = reloc.estimate_distance(
                (dataset.speaker_spectra[i], dataset.receiver_spectra[i]),
                gamma, resolved["mode"],
            )
            position = dataset.speaker_spectra[i].position[:dim]
            anchors.append(reloc.Anchor(position, estimate))
    else:
        print("error: need --anchors or (--manifest and --gamma)", file=sys.stderr)
        return EXIT_USAGE
    if len(anchors) < dim + 1:
        print(
            f"error: {dim}D localization needs at least {dim + 1} anchors, got "
            f"{len(anchors)}; record more speaker positions", file=sys.stderr,
        )
        return EXIT_USAGE
    fix = reloc.trilaterate(anchors, multistart_seed=int(resolved["seed"]))
    reloc.export_fix_json(fix, out / "fix.json")
    _dump_config(out, "localize", resolved)
    print(f"fix at {np.array2string(fix.position, precision=4)} "
          f"(residual {fix.residual:.6g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

COMPARE_DEFAULTS = {
    "out": "compare",
    "manifest": None,
    "gamma_ls": None,
    "gamma_mh": None,
    "gamma_nn": None,
    "gamma_true": None,
    "test_pairs": None,
    "mode": "magnitude_only",
}


def cmd_compare(args, file_config) -> int:
    resolved = _resolve(args, file_config, COMPARE_DEFAULTS)
    if resolved["manifest"] is None:
        print("error: --manifest is required", file=sys.stderr)
        return EXIT_USAGE
    methods = {}
    missing = []
    for key, label in (("gamma_ls", "least_squares"), ("gamma_mh", "bayes_mh"),
                       ("gamma_nn", "neural")):
        path = resolved[key]
        if path is None:
            continue
        if not Path(path).exists():
            missing.append(f"{label}: {path}")
            continue
        methods[label] = PropagationCoefficient.from_json(path)
    if missing:
        print("error: missing estimator artifacts:\n  " + "\n  ".join(missing),
              file=sys.stderr)
        return EXIT_DATA
    if not methods:
        print("error: no estimator outputs given (--gamma-ls/--gamma-mh/--gamma-nn)",
              file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(resolved)
    dataset = synth.load_dataset(resolved["manifest"])
    if resolved["test_pairs"] is None:
        test_pairs = list(range(len(dataset)))
    else:
        test_pairs = [int(i) for i in str(resolved["test_pairs"]).split(",")]

    rows = []
    table: dict = {"receivers": []}
    for i in test_pairs:
        pair = (dataset.speaker_spectra[i], dataset.receiver_spectra[i])
        entry = {"pair": i, "ground_truth": float(dataset.delta_x[i]), "methods": {}}
        for label, gamma in methods.items():
            estimate = reloc.estimate_distance(pair, gamma, resolved["mode"])
            entry["methods"][label] = estimate.to_dict()
            rows.append([i, label, estimate.mean, estimate.mode, estimate.std])
        rows.append([i, "ground_truth", float(dataset.delta_x[i]), "", ""])
        table["receivers"].append(entry)

    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "method", "mean", "mode", "std"])
        for row in rows:
            writer.writerow(row)
    with open(out / "comparison.json", "w") as fh:
        json.dump(table, fh, indent=1)
        fh.write("\n")

    # plot-ready per-frequency coefficient comparison
    grid = dataset.angular_frequencies
    header = ["omega"]
    columns = [grid]
    truth_path = resolved["gamma_true"]
    plotted = dict(methods)
    if truth_path is not None and Path(truth_path).exists():
        plotted["true"] = PropagationCoefficient.from_json(truth_path)
    for label, gamma in plotted.items():
        header += [f"alpha_{label}", f"kappa_{label}"]
        columns += [gamma.alpha, gamma.kappa]
    with open(out / "gamma_comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for j in range(grid.size):
            writer.writerow([f"{col[j]:.17g}" for col in columns])
    _dump_config(out, "compare", resolved)
    print(f"compared {len(methods)} method(s) over {len(test_pairs)} receiver(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or TOML config file (CLI flags win)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="PRNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acouprop",
        description="Estimate acoustic propagation coefficients, impulse "
                    "responses and distances from speaker/receiver recordings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--n-receivers", dest="n_receivers", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.add_argument("--profile", choices=["constant", "air_like"])
    p.add_argument("--alpha-value", dest="alpha_value", type=float)
    p.add_argument("--noise-std", dest="noise_std", type=float,
                   help="time-domain receiver noise std")
    p.add_argument("--format", choices=["csv", "wav"])
    p.add_argument("--min-distance", dest="min_distance", type=float)
    p.add_argument("--max-distance", dest="max_distance", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("infer-mh", help="Metropolis-Hastings coefficient inference")
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--iterations", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--alpha-mean", dest="alpha_mean", type=float)
    p.add_argument("--alpha-std", dest="alpha_std", type=float)
    p.add_argument("--kappa-mean", dest="kappa_mean", type=float)
    p.add_argument("--kappa-std", dest="kappa_std", type=float)
    p.add_argument("--sigma-scale", dest="sigma_scale", type=float)
    p.add_argument("--proposal-std-alpha", dest="proposal_std_alpha", type=float)
    p.add_argument("--proposal-std-kappa", dest="proposal_std_kappa", type=float)
    p.add_argument("--proposal-std-sigma", dest="proposal_std_sigma", type=float)
    p.add_argument("--lhs-mode", dest="lhs_mode", choices=["off", "hard", "soft"])
    p.add_argument("--lhs-param", dest="lhs_param", type=float)
    p.add_argument("--sigma-fixed", dest="sigma_fixed", type=float)
    p.add_argument("--update", choices=["per-bin", "joint"])
    p.add_argument("--pair-indices", dest="pair_indices",
                   help="comma-separated pair subset, e.g. 0 or 0,3,4")
    p.set_defaults(func=cmd_infer_mh)

    p = sub.add_parser("fit-ls", help="closed-form least-squares fit")
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--pair-indices", dest="pair_indices")
    p.set_defaults(func=cmd_fit_ls)

    p = sub.add_parser("train-nn", help="train the physics-loss network")
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--optimizer", choices=["sgd", "rmsprop"])
    p.add_argument("--hidden", help="comma-separated hidden layer sizes")
    p.add_argument("--variant", choices=["mlp", "autoencoder"])
    p.add_argument("--loss-weights", dest="loss_weights",
                   help="w_fwd,w_bwd,w_conc (default 1,1,1)")
    p.add_argument("--ensemble-k", dest="ensemble_k", type=int)
    p.add_argument("--pair-indices", dest="pair_indices")
    p.set_defaults(func=cmd_train_nn)

    p = sub.add_parser("rir", help="room impulse response")
    _add_common(p)
    p.add_argument("--gamma", help="coefficient JSON (with --delta-x)")
    p.add_argument("--delta-x", dest="delta_x", type=float)
    p.add_argument("--manifest", help="estimate from a measured pair instead")
    p.add_argument("--pair-index", dest="pair_index", type=int)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.set_defaults(func=cmd_rir)

    p = sub.add_parser("distance", help="speaker-receiver distance estimate")
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--gamma")
    p.add_argument("--pair-index", dest="pair_index", type=int)
    p.add_argument("--mode", choices=["magnitude_only", "complex_real_part"])
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("localize", help="2D/3D position from anchor distances")
    _add_common(p)
    p.add_argument("--anchors", help="anchors manifest JSON")
    p.add_argument("--manifest", help="dataset manifest (with --gamma)")
    p.add_argument("--gamma")
    p.add_argument("--mode", choices=["magnitude_only", "complex_real_part"])
    p.add_argument("--dim", type=int, choices=[2, 3])
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("compare", help="compare estimator outputs")
    _add_common(p)
    p.add_argument("--manifest")
    p.add_argument("--gamma-ls", dest="gamma_ls")
    p.add_argument("--gamma-mh", dest="gamma_mh")
    p.add_argument("--gamma-nn", dest="gamma_nn")
    p.add_argument("--gamma-true", dest="gamma_true")
    p.add_argument("--test-pairs", dest="test_pairs")
    p.add_argument("--mode", choices=["magnitude_only", "complex_real_part"])
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_config = _load_config_file(args.config)
        command_config = file_config.get(args.command.replace("-", "_"), file_config)
        return args.func(args, command_config)
    except (OverflowRangeError, TrainingDivergedError, NoFixError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidInputError, MissingFileError, AcoupropError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

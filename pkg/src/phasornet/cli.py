"""Command-line interface: train, eval, sweep, verify, export-spikes.

Every command is deterministic given --seed.  Metrics files are
byte-stable across runs except the wall_time_s column, which records
real elapsed time.  The default dataset directory comes from the
PHASORNET_DATA environment variable.
"""

import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .data import load_dataset_dir
from .model_io import load_model, save_model
from .network import PhasorClassifier, evaluate_atemporal
from .temporal import (
    RFParams,
    decode_spikes,
    evaluate_temporal,
    last_full_cycle,
    simulate_network,
)
from .verify import SUITES, run_suites

SPIKE_CSV_HEADER = ["layer", "neuron", "t"]


def _echo(ctx, message):
    if not ctx.obj["quiet"]:
        click.echo(message)


def _load_split(data_dir, split):
    if data_dir is None:
        raise click.UsageError(
            "no dataset directory: pass --data or set PHASORNET_DATA"
        )
    try:
        return load_dataset_dir(data_dir, split)
    except FileNotFoundError as err:
        raise click.UsageError(str(err)) from err


def _rf_params(cycles, steps_per_cycle):
    try:
        return RFParams(n_cycles=cycles, steps_per_cycle=steps_per_cycle)
    except ValueError as err:
        raise click.UsageError(str(err)) from err


def _fmt(value):
    """Full-precision, reproducible cell formatting."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_spike_csv(path, trains):
    """Spike dump: layer,neuron,t with 9-decimal seconds.

    Layer 0 is the encoded input train; each further layer is a dense
    layer's output train.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPIKE_CSV_HEADER)
        for depth, train in enumerate(trains):
            for t, neuron in zip(train.times, train.neurons):
                writer.writerow([depth, int(neuron), f"{t:.9f}"])


def write_trace_json(path, run, params):
    """Trace dump: per-cycle decoded phases and phase MSE per layer."""
    doc = {"layers": []}
    for depth, train in enumerate(run.trains):
        k_last = last_full_cycle(train.horizon, params, depth)
        cycles = []
        for k in range(k_last + 1):
            decoded, missing = decode_spikes(train, params, depth, k)
            mse = run.cycle_mse[depth][k]
            cycles.append(
                {
                    "cycle": k,
                    "phases": decoded.tolist(),
                    "missing": missing.tolist(),
                    "mse": None if np.isnan(mse) else float(mse),
                }
            )
        doc["layers"].append({"depth": depth, "cycles": cycles})
    Path(path).write_text(json.dumps(doc))


@click.group()
@click.option("--seed", default=0, show_default=True, help="Base RNG seed.")
@click.option("--threads", default=1, show_default=True, type=click.IntRange(1),
              help="Worker threads for per-image evaluation.")
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.pass_context
def main(ctx, seed, threads, quiet):
    """Phasor networks: atemporal training, spiking execution."""
    ctx.obj = {"seed": seed, "threads": threads, "quiet": quiet}


@main.command()
@click.option("--data", envvar="PHASORNET_DATA", type=click.Path(), default=None,
              help="Dataset directory (IDX layout).")
@click.option("--proj", type=click.Choice(["nrp", "rpp", "none"]), default="nrp",
              show_default=True, help="Intensity-to-phase conversion.")
@click.option("--hidden", multiple=True, type=click.IntRange(1), default=(100,),
              show_default=True, help="Hidden layer width (repeatable).")
@click.option("--epochs", type=click.IntRange(1), default=2, show_default=True)
@click.option("--batch-size", type=click.IntRange(1), default=128, show_default=True)
@click.option("--lr", type=click.FloatRange(0), default=1e-3, show_default=True)
@click.option("--optimizer", type=click.Choice(["adam", "sgd"]), default="adam",
              show_default=True)
@click.option("--dropout", type=click.FloatRange(0, 1, max_open=True), default=0.25,
              show_default=True, help="Hidden-layer neuronal dropout rate.")
@click.option("--density", type=click.FloatRange(0, 1, min_open=True), default=1.0,
              show_default=True, help="Nonzero fraction of the nrp matrix.")
@click.option("--limit", type=click.IntRange(1), default=None,
              help="Train on only the first N samples.")
@click.option("--out", type=click.Path(), required=True, help="Model JSON path.")
@click.option("--metrics", type=click.Path(), default=None,
              help="Per-epoch CSV: epoch,train_loss,train_acc,test_acc.")
@click.pass_context
def train(ctx, data, proj, hidden, epochs, batch_size, lr, optimizer, dropout,
          density, limit, out, metrics):
    """Train a phasor classifier and write the model JSON."""
    train_ds = _load_split(data, "train").subset(limit)
    test_ds = _load_split(data, "test")
    clf = PhasorClassifier(
        hidden=tuple(hidden),
        projection=proj,
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=lr,
        optimizer=optimizer,
        dropout=dropout,
        nrp_density=density,
        seed=ctx.obj["seed"],
        verbose=not ctx.obj["quiet"],
    )
    clf.fit(train_ds.images, train_ds.labels, eval_set=(test_ds.images, test_ds.labels))
    save_model(clf, out)
    _echo(ctx, f"model written to {out}")
    if metrics:
        with open(metrics, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "train_acc", "test_acc"])
            for rec in clf.history_:
                writer.writerow([_fmt(rec[k]) for k in ("epoch", "train_loss",
                                                        "train_acc", "test_acc")])
        _echo(ctx, f"metrics written to {metrics}")


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", envvar="PHASORNET_DATA", type=click.Path(), default=None)
@click.option("--split", type=click.Choice(["train", "test"]), default="test",
              show_default=True)
@click.option("--mode", type=click.Choice(["atemporal", "temporal"]),
              default="atemporal", show_default=True)
@click.option("--cycles", type=click.IntRange(1), default=10, show_default=True)
@click.option("--steps-per-cycle", type=int, default=40, show_default=True)
@click.option("--limit", type=click.IntRange(1), default=None)
@click.option("--out", type=click.Path(), default=None, help="Metrics JSON path.")
@click.option("--dump-trace", type=click.Path(), default=None,
              help="Spike CSV for the first evaluated image (temporal mode).")
@click.option("--dump-trace-json", type=click.Path(), default=None,
              help="Per-cycle phase/MSE JSON for the first image (temporal mode).")
@click.pass_context
def eval_cmd(ctx, model_path, data, split, mode, cycles, steps_per_cycle, limit,
             out, dump_trace, dump_trace_json):
    """Evaluate a model atemporally or through the spiking simulation."""
    clf = load_model(model_path)
    ds = _load_split(data, split).subset(limit)
    started = time.perf_counter()
    report = {"mode": mode, "model": str(model_path), "split": split, "n": len(ds)}
    if mode == "atemporal":
        accuracy, confusion = evaluate_atemporal(clf, ds.images, ds.labels)
        report["accuracy"] = accuracy
        report["confusion"] = confusion.tolist()
    else:
        params = _rf_params(cycles, steps_per_cycle)
        result = evaluate_temporal(
            clf, ds.images, ds.labels, params,
            seed=ctx.obj["seed"], threads=ctx.obj["threads"],
        )
        report.update(
            accuracy=result.accuracy,
            silent=result.silent,
            cycles=cycles,
            steps_per_cycle=steps_per_cycle,
            synops_total=result.synops_total,
            per_cycle_output_mse=[
                None if np.isnan(v) else float(v) for v in result.per_cycle_output_mse
            ],
            final_mse_per_layer=[
                None if np.isnan(v) else float(v) for v in result.final_mse_per_layer
            ],
        )
        if dump_trace or dump_trace_json:
            run = simulate_network(clf, ds.images[0], params)
            if dump_trace:
                write_spike_csv(dump_trace, run.trains)
                _echo(ctx, f"spike trace written to {dump_trace}")
            if dump_trace_json:
                write_trace_json(dump_trace_json, run, params)
                _echo(ctx, f"cycle trace written to {dump_trace_json}")
    report["wall_time_s"] = round(time.perf_counter() - started, 3)
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text)
        _echo(ctx, f"metrics written to {out}")
    else:
        click.echo(text)


def _parse_values(param, values):
    out = []
    for chunk in values.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            value = float(chunk)
        except ValueError as err:
            raise click.UsageError(f"--values entry {chunk!r} is not a number") from err
        if param == "steps":
            if value != int(value) or value < 8:
                raise click.UsageError(
                    f"--values entry {chunk!r}: steps must be integers >= 8"
                )
            value = int(value)
        elif param == "dropout":
            if not 0.0 <= value <= 1.0:
                raise click.UsageError(f"--values entry {chunk!r}: dropout must be in [0, 1]")
        elif value < 0:
            raise click.UsageError(f"--values entry {chunk!r}: jitter must be >= 0")
        out.append(value)
    if not out:
        raise click.UsageError("--values is empty")
    return out


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", envvar="PHASORNET_DATA", type=click.Path(), default=None)
@click.option("--split", type=click.Choice(["train", "test"]), default="test",
              show_default=True)
@click.option("--param", type=click.Choice(["dropout", "jitter", "steps"]),
              required=True, help="Swept perturbation or grid parameter.")
@click.option("--values", required=True, help="Comma-separated grid values.")
@click.option("--cycles", type=click.IntRange(1), default=10, show_default=True)
@click.option("--steps-per-cycle", type=int, default=40, show_default=True)
@click.option("--limit", type=click.IntRange(1), default=None)
@click.option("--perturb-input", is_flag=True,
              help="Also perturb the encoded input train.")
@click.option("--out", type=click.Path(), required=True, help="Sweep CSV path.")
@click.pass_context
def sweep(ctx, model_path, data, split, param, values, cycles, steps_per_cycle,
          limit, perturb_input, out):
    """Temporal sensitivity sweep; one CSV row per grid point.

    Relative accuracy always divides by the same model's unperturbed
    temporal accuracy at the base grid settings.
    """
    grid = _parse_values(param, values)
    clf = load_model(model_path)
    ds = _load_split(data, split).subset(limit)
    base_params = _rf_params(cycles, steps_per_cycle)
    seed = ctx.obj["seed"]
    threads = ctx.obj["threads"]

    baseline = evaluate_temporal(
        clf, ds.images, ds.labels, base_params, seed=seed, threads=threads
    )
    _echo(ctx, f"baseline temporal accuracy {baseline.accuracy:.4f} on {baseline.n}")

    n_layers = len(clf.layers_)
    header = (
        ["param", "value", "accuracy", "relative_accuracy"]
        + [f"phase_mse_l{i + 1}" for i in range(n_layers)]
        + ["synops", "wall_time_s"]
    )
    rows = []
    for i, value in enumerate(grid):
        started = time.perf_counter()
        params = base_params
        kwargs = {}
        if param == "steps":
            params = replace(base_params, steps_per_cycle=int(value))
        elif param == "dropout":
            kwargs["drop_prob"] = value
        else:
            kwargs["jitter"] = value
        result = evaluate_temporal(
            clf, ds.images, ds.labels, params,
            perturb_input=perturb_input, seed=[seed, i], threads=threads, **kwargs,
        )
        elapsed = round(time.perf_counter() - started, 3)
        relative = result.accuracy / baseline.accuracy if baseline.accuracy > 0 else float("nan")
        rows.append(
            [param, value, result.accuracy, relative]
            + list(result.final_mse_per_layer)
            + [result.synops_total, elapsed]
        )
        _echo(ctx, f"{param}={value}: accuracy {result.accuracy:.4f} "
                   f"(relative {relative:.4f})")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    _echo(ctx, f"sweep written to {out}")


@main.command()
@click.option("--suite", multiple=True, type=click.Choice(sorted(SUITES)),
              help="Run only the named suite (repeatable).")
def verify(suite):
    """Run the built-in property suites; exit 0 only if all pass."""
    failed = []
    for name, ok, detail in run_suites(suite or None):
        click.echo(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
        if not ok:
            failed.append((name, detail))
    if failed:
        name, detail = failed[0]
        click.echo(f"first failure: {name}: {detail}", err=True)
        sys.exit(1)


@main.command("export-spikes")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", envvar="PHASORNET_DATA", type=click.Path(), default=None)
@click.option("--split", type=click.Choice(["train", "test"]), default="test",
              show_default=True)
@click.option("--index", type=click.IntRange(0), default=0, show_default=True,
              help="Image index within the split.")
@click.option("--cycles", type=click.IntRange(1), default=10, show_default=True)
@click.option("--steps-per-cycle", type=int, default=40, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Spike CSV path.")
@click.option("--trace", type=click.Path(), default=None,
              help="Optional per-cycle phase/MSE JSON path.")
@click.pass_context
def export_spikes(ctx, model_path, data, split, index, cycles, steps_per_cycle,
                  out, trace):
    """Simulate one image and dump its spike trains."""
    clf = load_model(model_path)
    ds = _load_split(data, split)
    if index >= len(ds):
        raise click.UsageError(f"--index {index} out of range for {len(ds)} samples")
    params = _rf_params(cycles, steps_per_cycle)
    run = simulate_network(clf, ds.images[index], params)
    write_spike_csv(out, run.trains)
    _echo(ctx, f"spike trains for image {index} written to {out}")
    if trace:
        write_trace_json(trace, run, params)
        _echo(ctx, f"cycle trace written to {trace}")


if __name__ == "__main__":
    main()

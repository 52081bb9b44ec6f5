import csv
import functools
import io
import json
import logging
from collections.abc import Callable
from pathlib import Path

import click
import numpy as np

from spectnt.diagnostics import run_suite
from spectnt.errors import ConfigError, SpecTNTError
from spectnt.features.spectrogram import crop_to_pooling, extract_features
from spectnt.features.wav import load_wav
from spectnt.io.checkpoint import restore_model
from spectnt.io.runconfig import RunConfig, load_run_config
from spectnt.io.tensorfile import atomic_write, read_tensor
from spectnt.model.config import Variant
from spectnt.model.spectnt import build_variant
from spectnt.reporting.formatter import generate_section, update_report
from spectnt.reporting.history import format_value
from spectnt.reporting.summary import rank_variants
from spectnt.synth.store import load_dataset, write_dataset
from spectnt.synth.tasks import DEFAULT_SPECS, SynthSample, SynthTaskSpec, chord_name, class_to_hz
from spectnt.training.ablation import run_ablation
from spectnt.training.loop import METRIC_COLUMNS, PRIMARY_METRIC, evaluate, train_loop

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def exit_codes(fn: Callable) -> Callable:
    """Map library errors to exit codes: config 2, anything else from spectnt 3."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"spectnt: config error: {e}", err=True)
            raise click.exceptions.Exit(EXIT_CONFIG) from e
        except SpecTNTError as e:
            click.echo(f"spectnt: {type(e).__name__}: {e}", err=True)
            raise click.exceptions.Exit(EXIT_RUNTIME) from e

    return wrapper


@click.group()
@click.version_option(package_name="spectnt")
@click.option("-v", "--verbose", count=True, help="Repeat for more logging (-v info, -vv debug)")
def cli(verbose):
    """Train and evaluate SpecTNT models on synthetic music tasks."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load_run(config, preset, data, out, **overrides) -> tuple[RunConfig, dict[str, list[SynthSample]]]:
    run = load_run_config(config, preset, data=data, out=out, **overrides)
    if not run.data:
        raise ConfigError("no dataset given; pass --data or set \"data\" in the run config")
    spec, splits = load_dataset(run.data)
    if spec.task != run.task:
        raise ConfigError(f"dataset holds {spec.task} clips but the run is configured for {run.task}")
    if spec.bins != run.bins or spec.frames > run.frames:
        raise ConfigError(
            f"dataset clips ({spec.frames} frames, {spec.bins} bins) do not fit the model input "
            f"(at most {run.frames} frames, {run.bins} bins)"
        )
    return run, splits


def _run_options(fn: Callable) -> Callable:
    options = [
        click.option("--config", type=click.Path(exists=True, dir_okay=False, path_type=Path)),
        click.option("--preset", help="tagging, melody, chord or their -desk variants"),
        click.option("--data", type=click.Path(file_okay=False), help="Dataset written by gen-data"),
        click.option("--out", envvar="SPECTNT_OUT", type=click.Path(file_okay=False)),
        click.option("--steps", type=int),
        click.option("--seed", envvar="SPECTNT_SEED", type=int),
        click.option("--eval-every", type=int),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@cli.command()
@_run_options
@click.option("--variant", type=click.Choice([v.value for v in Variant]))
@exit_codes
def train(config, preset, data, out, steps, seed, eval_every, variant):
    """Train one model and write checkpoints plus history.csv under --out."""
    run, splits = _load_run(config, preset, data, out, steps=steps, seed=seed,
                            eval_every=eval_every, variant=variant)
    if not run.out:
        raise ConfigError("train needs an output directory (--out or SPECTNT_OUT)")
    out_dir = Path(run.out)
    atomic_write(out_dir / "run.json", json.dumps(run.to_dict(), indent=2).encode("utf-8"))

    model = build_variant(run.model_config(), seed=run.seed)
    history = train_loop(run.train_config(), model, splits["train"], splits.get("val"))
    final = history[-1]["loss"] if history else float("nan")
    click.echo(f"Trained {run.variant} for {len(history)} step(s), final loss {format_value(final)}")
    click.echo(f"Checkpoints and history in {out_dir}")


@cli.command("eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", default="test", show_default=True)
@click.option("--min-metric", type=float, help="Fail (exit 1) when the primary metric (%) is lower")
@exit_codes
def eval_(checkpoint, data, split, min_metric):
    """Print task metrics of a checkpoint on a dataset split as JSON."""
    model, _ = restore_model(checkpoint)
    spec, splits = load_dataset(data)
    if split not in splits:
        raise ConfigError(f"dataset has no split {split!r}; available: {sorted(splits)}")
    report = evaluate(model, splits[split], spec.task, midi_base=spec.midi_base)
    click.echo(json.dumps(report.to_dict(), indent=2))
    primary = PRIMARY_METRIC[spec.task]
    if min_metric is not None and 100.0 * report[primary] < min_metric:
        click.echo(f"{primary} {100.0 * report[primary]:.2f}% is below {min_metric}%", err=True)
        raise click.exceptions.Exit(EXIT_FAILURE)


def _features_for(path: Path, task: str) -> np.ndarray:
    if path.suffix.lower() == ".wav":
        return extract_features(task, load_wav(path))
    return read_tensor(path).astype(np.float32)


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), help="CSV file (default stdout)")
@click.option("--midi-base", default=36, show_default=True, help="MIDI note of pitch class 1")
@click.argument(
    "inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@exit_codes
def predict(checkpoint, output, midi_base, inputs):
    """Write per-input predictions as CSV: tag probabilities, frame F0 or frame chord labels."""
    model, _ = restore_model(checkpoint)
    cfg = model.config
    buf = io.StringIO()
    writer = csv.writer(buf)
    if cfg.task == "tagging":
        writer.writerow(["input", *(f"tag_{i}" for i in range(cfg.classes))])
    elif cfg.task == "melody":
        writer.writerow(["input", "frame", "class", "f0_hz"])
    else:
        writer.writerow(["input", "frame", "label", "chord"])

    for path in inputs:
        feats = crop_to_pooling(_features_for(path, cfg.task), cfg.p_f, cfg.p_t)
        out = model(feats, train=False).data
        if cfg.task == "tagging":
            writer.writerow([path.name, *(format_value(float(p)) for p in out)])
            continue
        classes = out.argmax(axis=-1)
        for t, c in enumerate(classes):
            if cfg.task == "melody":
                writer.writerow([path.name, t, int(c), format_value(float(class_to_hz(c, midi_base)))])
            else:
                writer.writerow([path.name, t, int(c), chord_name(int(c))])

    if output is None:
        click.echo(buf.getvalue(), nl=False)
    else:
        atomic_write(output, buf.getvalue().encode("utf-8"))
        click.echo(f"Wrote predictions for {len(inputs)} input(s) to {output}")


@cli.command()
@click.option("--seed", default=0, show_default=True, envvar="SPECTNT_SEED", type=int)
@click.option("--max-checks", default=12, show_default=True, help="Coordinates checked per parameter")
@click.option("--skip-layers", is_flag=True, help="Only check the micro model variants")
@exit_codes
def gradcheck(seed, max_checks, skip_layers):
    """Finite-difference check of every layer op and the micro model; exit 0 iff all pass."""
    result = run_suite(seed=seed, max_checks=max_checks, layers=not skip_layers)
    for line in result.lines():
        click.echo(line)
    if not result.passed:
        click.echo(f"gradcheck FAILED (max relative error {result.max_error:.3e})", err=True)
        raise click.exceptions.Exit(EXIT_FAILURE)
    click.echo(f"gradcheck passed (max relative error {result.max_error:.3e})")


@cli.command()
@_run_options
@click.option("--variants", multiple=True, type=click.Choice([v.value for v in Variant]),
              help="Repeatable; defaults to all four")
@click.option("--report", type=click.Path(dir_okay=False, path_type=Path),
              help="Markdown file whose ablation section is replaced in place")
@exit_codes
def ablate(config, preset, data, out, steps, seed, eval_every, variants, report):
    """Train full, A1, A2 and A3 on one split and print a comparison table."""
    run, splits = _load_run(config, preset, data, out, steps=steps, seed=seed, eval_every=eval_every)
    if not run.eval_every:
        raise ConfigError("ablate compares validation metrics; eval_every must be positive")
    summaries = run_ablation(
        run.model_config(), run.train_config(), splits["train"], splits["val"],
        variants or tuple(Variant),
    )
    primary = PRIMARY_METRIC[run.task]
    section = generate_section(rank_variants(summaries, primary), run.task, METRIC_COLUMNS[run.task])
    click.echo(section)
    if report is not None:
        update_report(report, run.task, section)
        click.echo(f"Updated {report}")


@cli.command("gen-data")
@click.option("--task", required=True, type=click.Choice(sorted(DEFAULT_SPECS)))
@click.option("--out", required=True, envvar="SPECTNT_OUT", type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", default=0, show_default=True, envvar="SPECTNT_SEED", type=int)
@click.option("--train-size", type=int)
@click.option("--val-size", type=int)
@click.option("--test-size", type=int)
@click.option("--sigma", type=float, help="Uniform noise half-width")
@click.option("--frames", type=int)
@click.option("--bins", type=int)
@click.option("--classes", type=int)
@click.option("--workers", default=8, show_default=True)
@exit_codes
def gen_data(task, out, seed, workers, **overrides):
    """Materialise a synthetic dataset: tensor files plus manifest.json."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    try:
        spec: SynthTaskSpec = DEFAULT_SPECS[task].replace(seed=seed, **changes)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    manifest = write_dataset(spec, out, workers=workers)
    click.echo(f"Wrote {spec.total} {task} clip(s) ({spec.train_size}/{spec.val_size}/{spec.test_size})")
    click.echo(f"Manifest: {manifest}")


def main(argv: list[str] | None = None) -> int:
    """Console entry point; returns the process exit code."""
    try:
        rv = cli.main(args=argv, prog_name="spectnt", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_CONFIG
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_FAILURE
    return rv if isinstance(rv, int) else 0

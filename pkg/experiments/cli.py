"""Command-line front end: each subcommand wraps one pipeline operation and composes through files."""
import dataclasses
import functools
import logging
from pathlib import Path

import click
import pandas as pd
from pydantic import ValidationError

from experiments.models import METHODS, DatasetConfig, ExperimentConfig, PerturbConfig
from experiments.services import build_stream, idol_config, optimizer, refinement_config
from experiments.tasks import run_experiment
from Idol import settings
from learners.models import ClassifierParams, ClassifierSpec
from learners.services import accuracy, train_supervised
from numerics.models import ParamVector
from pipeline.models import DomainSequence, TheoryInputs
from pipeline.services import coarse_scores, run_gradual, sequence_from_index, sort_and_chunk, theory_bound
from refinement.services import refine_sequence
from scoring.models import ScoredPool, ScorerChoice
from streams.services import read_stream_csv, write_stream_csv
from utils.exceptions import AssumptionViolatedException, ContractException, FormatException
from utils.files import atomic_write_text
from utils.locks import ResourceLockedException

logger = logging.getLogger(__name__)

EXIT_ERRORS = (
    ContractException, FormatException, AssumptionViolatedException, ResourceLockedException, ValidationError, OSError,
)


def reports_errors(command):
    """Turn domain errors into a one-line message and a nonzero exit status."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except EXIT_ERRORS as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


def config_options(command):
    """ExperimentConfig file plus per-field overrides."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML config"),
        click.option("--num-domains", type=int, help="Number of intermediate domains (M - 1)"),
        click.option("--keep-frac", type=float),
        click.option("--hidden", type=int, multiple=True, help="Hidden layer widths, repeatable"),
        click.option("--lr", type=float, help="SGD learning rate for source, domain and discriminator training"),
        click.option("--weight-decay", type=float, help="L2 penalty added to every training loss"),
        click.option("--batch-size", type=int),
        click.option("--source-epochs", type=int),
        click.option("--domain-epochs", type=int),
        click.option("--discriminator-epochs", type=int),
        click.option("--rounds", type=int, help="Progressive discriminator rounds K (default 2M)"),
        click.option("--embed-dim", type=int),
        click.option("--t-steps", type=int),
        click.option("--refine-epochs", type=int),
        click.option("--lr-theta", type=float),
        click.option("--lr-q", type=float),
        click.option("--q-optimizer", type=click.Choice(["adam", "sgd"])),
        click.option("--refine-init", type=click.Choice(["ramp", "scores"])),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def resolve_config(config_path=None, hidden=(), **overrides) -> ExperimentConfig:
    config = ExperimentConfig.load(config_path) if config_path else ExperimentConfig()
    return config.with_overrides(hidden_dims=list(hidden) or None, **overrides)


def load_classifier(path, input_dim: int) -> ClassifierParams:
    """Rebuild the classifier spec from the layout stored in the parameter file."""
    vector = ParamVector.load(path)
    shapes = dict(vector.layout)
    if "head.weight" not in shapes:
        raise FormatException(f"{path} holds no classifier head", offset=0)
    hidden = [shape[1] for name, shape in vector.layout if name.startswith("hidden") and name.endswith(".weight")]
    spec = ClassifierSpec(input_dim=input_dim, num_classes=shapes["head.weight"][1], hidden_dims=tuple(hidden))
    return ClassifierParams(spec=spec, vector=vector)


@click.group()
def cli():
    """Intermediate domain discovery and gradual self-training."""
    settings.configure_logging()


# =========================================================
# DATA
# =========================================================

@cli.command()
@click.option("--kind", type=click.Choice(["gaussians", "moons"]), default="gaussians")
@click.option("--num-classes", type=int, default=3)
@click.option("--points-per-domain", type=int, default=100)
@click.option("--generator-domains", type=int, default=9, help="Source is domain 0, target the last one")
@click.option("--total-angle", type=float, default=120.0)
@click.option("--noise-sd", type=float, default=0.2)
@click.option("--perturb", type=click.Choice(["subsample_frac", "noisy_index_frac", "outlier_extension"]))
@click.option("--magnitude", type=float, multiple=True, help="Perturbation magnitude; twice for an angle range")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@reports_errors
def gen(kind, num_classes, points_per_domain, generator_domains, total_angle, noise_sd, perturb, magnitude, seed,
        out):
    """Generate a rotated synthetic stream and write it as CSV."""
    perturb_config = None
    if perturb:
        if not magnitude:
            raise click.UsageError("--perturb needs --magnitude")
        perturb_config = PerturbConfig(mode=perturb, magnitude=list(magnitude) if len(magnitude) > 1 else magnitude[0])
    dataset = DatasetConfig(
        kind=kind, num_classes=num_classes, points_per_domain=points_per_domain,
        generator_domains=generator_domains, total_angle=total_angle, noise_sd=noise_sd, perturb=perturb_config,
    )
    stream = build_stream(ExperimentConfig(dataset=dataset), seed)
    write_stream_csv(stream, out)
    click.echo(f"{out}: source={len(stream.source)} pool={len(stream.intermediate)} target={len(stream.target)}")


@cli.command("train-source")
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@config_options
@reports_errors
def train_source(stream_path, seed, out, **options):
    """Train the source classifier and save its parameter vector."""
    config = resolve_config(**options)
    stream = read_stream_csv(stream_path)
    spec = ClassifierSpec(stream.source.dim, stream.num_classes, hidden_dims=tuple(config.hidden_dims))
    params = train_supervised(spec, stream.source, optimizer(config, config.source_epochs), seed)
    params.vector.save(out)
    click.echo(f"{out}: source accuracy {accuracy(params, stream.source):.4f}, "
               f"target accuracy {accuracy(params, stream.target):.4f}")


# =========================================================
# DISCOVERY
# =========================================================

@cli.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scorer", type=click.Choice([s.value for s in ScorerChoice]), default="progressive")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Score CSV")
@click.option("--sequence-out", type=click.Path(dir_okay=False), help="Also write the sorted, chunked sequence")
@config_options
@reports_errors
def score(stream_path, params_path, scorer, seed, out, sequence_out, **options):
    """Coarse domain scores for every pooled example."""
    config = resolve_config(**options)
    scorer = ScorerChoice(scorer)
    stream = read_stream_csv(stream_path)
    source_params = load_classifier(params_path, stream.source.dim) if params_path else None
    if source_params is None and scorer in (ScorerChoice.CONFIDENCE, ScorerChoice.MANIFOLD):
        raise click.UsageError(f"--scorer {scorer.value} needs --params")

    scored = coarse_scores(
        stream.source, stream.target.unlabeled(), stream.intermediate,
        idol_config(config, scorer, refine=False), seed, source_params,
    )
    scored.write_csv(out)
    if sequence_out:
        sort_and_chunk(scored, config.num_domains).write(sequence_out, stream.intermediate.ids)
    click.echo(f"{out}: {len(scored)} scores from {scored.scorer_id}")


@cli.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Sequence file")
@click.option("--losses-out", type=click.Path(dir_okay=False), help="Per-epoch cycle losses as CSV")
@config_options
@reports_errors
def refine(stream_path, params_path, scores_path, seed, out, losses_out, **options):
    """Refine the coarse order from a score file into a domain sequence."""
    config = resolve_config(**options)
    stream = read_stream_csv(stream_path)
    pool = stream.intermediate
    scored = ScoredPool.read_csv(scores_path, pool)
    fine = refine_sequence(
        stream.source, load_classifier(params_path, pool.dim), pool, scored.order(), config.num_domains + 1,
        refinement_config(config), seed, coarse_scores=scored.scores,
    )
    sequence = DomainSequence(tuple(fine.chunks), len(pool), f"{scored.scorer_id}_refined", tuple(fine.cycle_losses))
    sequence.write(out, pool.ids)
    if losses_out:
        rows = [
            {"domain_index": m, "epoch": epoch, "cycle_loss": loss}
            for m, losses in enumerate(sequence.cycle_losses)
            for epoch, loss in enumerate(losses, start=1)
        ]
        frame = pd.DataFrame(rows, columns=["domain_index", "epoch", "cycle_loss"])
        atomic_write_text(losses_out, frame.to_csv(index=False, float_format="%.6g"))
    click.echo(f"{out}: {len(sequence)} domains of sizes {sequence.sizes}")


@cli.command()
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sequence", "sequence_path", type=click.Path(exists=True, dir_okay=False),
              help="Sequence file; defaults to the ground-truth order")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), help="Per-step CSV")
@config_options
@reports_errors
def gda(stream_path, params_path, sequence_path, seed, out, **options):
    """Gradual self-training along a sequence, then on the target."""
    config = resolve_config(**options)
    stream = read_stream_csv(stream_path)
    pool = stream.intermediate
    if sequence_path:
        sequence = DomainSequence.read(sequence_path, pool)
    else:
        sequence = sequence_from_index(stream.truth_index, config.num_domains)

    params, log = run_gradual(
        load_classifier(params_path, pool.dim), sequence, pool, stream.target.unlabeled(),
        config.keep_frac, optimizer(config, config.domain_epochs), seed, evaluation=stream.target,
    )
    if out:
        frame = pd.DataFrame([dataclasses.asdict(entry) for entry in log])
        atomic_write_text(out, frame.to_csv(index=False, float_format="%.6g"))
    click.echo(f"target accuracy {accuracy(params, stream.target):.4f} after {len(log)} steps")


# =========================================================
# THEORY & EXPERIMENTS
# =========================================================

@cli.command()
@click.option("--l0", type=float, default=0.0, help="Source loss")
@click.option("--b", "B", type=float, default=1.0, help="Data norm bound")
@click.option("--r", "R", type=float, default=1.0, help="Classifier norm bound")
@click.option("--rho", type=float, required=True, help="Per-step shift")
@click.option("--m", "M", type=int, required=True, help="Number of steps")
@click.option("--n", type=int, required=True, help="Pool size")
@click.option("--delta", type=float, default=0.05)
@reports_errors
def bound(l0, B, R, rho, M, n, delta):
    """Evaluate the gradual self-training error bound."""
    inputs = TheoryInputs(L0=l0, B=B, R=R, rho=rho, M=M, n=n, delta=delta)
    click.echo(f"beta={inputs.beta:.6g} bound={theory_bound(inputs):.6g}")


@cli.command()
@click.option("--out", type=click.Path(file_okay=False), help=f"Report directory (default {settings.OUTPUT_DIR})")
@click.option("--seed", "seeds", type=int, multiple=True, help="Repeatable; overrides the config's seeds")
@click.option("--method", "methods", type=click.Choice(METHODS), multiple=True, help="Repeatable")
@click.option("--refine/--no-refine", default=None, help="Keep only refined (or only unrefined) sequence methods")
@config_options
@reports_errors
def experiment(out, seeds, methods, refine, **options):
    """Run the (method x seed) grid and write the report."""
    config = resolve_config(**options).with_overrides(
        seeds=list(seeds) or None,
        methods=list(methods) or None,
    )
    if refine is not None:
        kept = [m for m in config.methods if m.endswith("_refined") == refine or not _is_sequence_method(m)]
        config = config.with_overrides(methods=kept)

    report = run_experiment(config, out)
    summary = report.summary_frame()
    click.echo(summary.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    if report.failures:
        raise click.ClickException(f"{len(report.failures)} of {len(report.cells)} cells failed; see metrics.csv")


def _is_sequence_method(method: str) -> bool:
    return method.startswith(("gda_", "idol_"))


def main():
    cli()


if __name__ == "__main__":
    main()

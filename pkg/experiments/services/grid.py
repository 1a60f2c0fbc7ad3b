import logging
import math

from adaptation.services import gradual_self_train
from experiments.models import ExperimentConfig
from learners.models import ClassifierSpec, OptimizerConfig
from learners.services import accuracy, train_supervised
from pipeline.models import DomainSequence, IdolConfig
from pipeline.services import (
    class_balance_ratio,
    correlation_report,
    idol,
    run_gradual,
    sequence_from_index,
)
from refinement.models import RefinementConfig
from refinement.services import refine_sequence
from scoring.models import ScorerChoice
from streams.models import ShiftStream
from streams.services import (
    gen_rotated_gaussians,
    gen_rotated_images,
    gen_rotated_moons,
    load_idx_images,
    perturb_stream,
    read_stream_csv,
)
from utils.exceptions import ContractException

logger = logging.getLogger(__name__)

STEP_COLUMNS = ["method", "seed", "step", "domain_index", "size", "kept", "target_accuracy", "training_loss",
                "cycle_loss"]


# =========================================================
# CONFIG -> COMPONENT SETTINGS
# =========================================================

def optimizer(config: ExperimentConfig, epochs: int) -> OptimizerConfig:
    return OptimizerConfig(
        lr=config.lr, epochs=epochs, batch_size=config.batch_size, weight_decay=config.weight_decay,
    )


def refinement_config(config: ExperimentConfig) -> RefinementConfig:
    return RefinementConfig(
        t_steps=config.t_steps,
        epochs=config.refine_epochs,
        lr_theta=config.lr_theta,
        lr_q=config.lr_q,
        q_optimizer=config.q_optimizer,
        batch_size=config.batch_size,
        init=config.refine_init,
        keep_frac=config.keep_frac,
        self_train_opt=optimizer(config, config.domain_epochs),
    )


def idol_config(config: ExperimentConfig, scorer: ScorerChoice, refine: bool) -> IdolConfig:
    return IdolConfig(
        num_domains=config.num_domains,
        scorer=scorer,
        refine=refine,
        rounds=config.rounds,
        embed_dim=config.embed_dim,
        discriminator_hidden=tuple(config.hidden_dims),
        discriminator_opt=optimizer(config, config.discriminator_epochs),
        self_train_opt=optimizer(config, config.domain_epochs),
        refinement=refinement_config(config),
    )


def build_stream(config: ExperimentConfig, seed: int) -> ShiftStream:
    dataset = config.dataset
    if dataset.kind == "gaussians":
        stream = gen_rotated_gaussians(
            dataset.num_classes, dataset.points_per_domain, dataset.generator_domains,
            dataset.total_angle, dataset.noise_sd, seed,
        )
    elif dataset.kind == "moons":
        stream = gen_rotated_moons(
            dataset.points_per_domain, dataset.generator_domains, dataset.total_angle, dataset.noise_sd, seed,
        )
    elif dataset.kind == "csv":
        stream = read_stream_csv(dataset.path)
    else:
        base = load_idx_images(dataset.images_path, dataset.labels_path)
        stream = gen_rotated_images(base, dataset.width, dataset.height, seed)

    if dataset.perturb is not None:
        stream = perturb_stream(stream, dataset.perturb.mode, dataset.perturb.magnitude, seed)
    return stream


# =========================================================
# ONE (METHOD, SEED) CELL
# =========================================================

def _sequence_for(method: str, config: ExperimentConfig, stream: ShiftStream, source_params, seed: int):
    refine = method.endswith("_refined")
    base = method.removesuffix("_refined")

    if base == "gda_predefined":
        sequence = sequence_from_index(stream.truth_index, config.num_domains)
        if not refine:
            return sequence
        fine = refine_sequence(
            stream.source, source_params, stream.intermediate, sequence.flattened(), config.num_domains + 1,
            refinement_config(config), seed, coarse_scores=-stream.truth_index,
        )
        return DomainSequence(tuple(fine.chunks), len(stream.intermediate), method, tuple(fine.cycle_losses))

    scorer = ScorerChoice.RANDOM if base == "gda_random" else ScorerChoice(base.removeprefix("idol_"))
    return idol(
        stream.source, stream.target.unlabeled(), stream.intermediate,
        idol_config(config, scorer, refine), seed, source_params=source_params,
    )


def _sequence_metrics(sequence: DomainSequence, stream: ShiftStream) -> dict:
    try:
        metrics = correlation_report(sequence, stream.truth_index)
    except ContractException:
        metrics = {"spearman": math.nan, "pearson": math.nan}
    metrics["class_balance"] = class_balance_ratio(sequence, stream.intermediate_labels, stream.num_classes)
    return metrics


def run_cell(config: ExperimentConfig, method: str, seed: int) -> dict:
    """
    Train the source model, run one method of the grid and collect its rows.
    The returned dict holds only plain values so it can travel as a task result.
    """
    stream = build_stream(config, seed)
    spec = ClassifierSpec(
        input_dim=stream.source.dim, num_classes=stream.num_classes, hidden_dims=tuple(config.hidden_dims),
    )
    source_params = train_supervised(spec, stream.source, optimizer(config, config.source_epochs), seed)
    domain_opt = optimizer(config, config.domain_epochs)
    target = stream.target.unlabeled()

    sequence = None
    metrics = {"spearman": math.nan, "pearson": math.nan, "class_balance": math.nan}
    if method == "source_only":
        params, log = source_params, []
    elif method == "uda_target":
        params, log = gradual_self_train(source_params, [], target, config.keep_frac, domain_opt, seed, stream.target)
    elif method == "uda_target_pool":
        params, log = gradual_self_train(
            source_params, [stream.intermediate], target, config.keep_frac, domain_opt, seed, stream.target,
        )
    else:
        sequence = _sequence_for(method, config, stream, source_params, seed)
        metrics = _sequence_metrics(sequence, stream)
        params, log = run_gradual(
            source_params, sequence, stream.intermediate, target, config.keep_frac, domain_opt, seed, stream.target,
        )

    metrics["final_accuracy"] = accuracy(params, stream.target)
    cycle_losses = [list(losses) for losses in sequence.cycle_losses] if sequence is not None else []

    steps = []
    for entry in log:
        losses = cycle_losses[entry.domain_index] if entry.domain_index < len(cycle_losses) else []
        steps.append({
            "method": method,
            "seed": seed,
            "step": entry.step,
            "domain_index": entry.domain_index,
            "size": entry.size,
            "kept": entry.kept,
            "target_accuracy": entry.target_accuracy,
            "training_loss": entry.training_loss,
            "cycle_loss": losses[-1] if losses else math.nan,
        })

    logger.info(
        f"Cell {method} seed={seed} acc={metrics['final_accuracy']:.4f} spearman={metrics['spearman']:.4f}",
        extra={"method": method, "seed": seed},
    )
    return {
        "method": method,
        "seed": seed,
        "steps": steps,
        "metrics": metrics,
        "cycle_losses": cycle_losses,
        "sequence": None if sequence is None else [
            stream.intermediate.ids[chunk].tolist() for chunk in sequence.chunks
        ],
        "error": None,
    }


def failed_cell(method: str, seed: int, error: str) -> dict:
    return {
        "method": method,
        "seed": seed,
        "steps": [],
        "metrics": {"spearman": math.nan, "pearson": math.nan, "class_balance": math.nan,
                    "final_accuracy": math.nan},
        "cycle_losses": [],
        "sequence": None,
        "error": error,
    }


def grid_cells(config: ExperimentConfig) -> list:
    """(method, seed) pairs in report order: seeds outer, methods as configured."""
    return [(method, seed) for seed in config.seeds for method in config.methods]

"""Command-line interface for daa-bench."""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.table import Table

from . import __version__
from .cas.mdp import build_mdp
from .cas.solver import value_iteration
from .cas.table import PolicyTable, export_table_csv, load_table, save_table
from .config.settings import PerceptionBackendKind, ToolkitConfig, load_config
from .core.errors import ConfigError, DaaBenchError, UnknownFacetError
from .dataset.records import (
    RunManifest,
    read_encounters,
    summary_from_json,
    summary_to_json,
    write_encounters,
    write_manifest,
    write_results,
)
from .dataset.synthetic import (
    generate_synthetic_dataset,
    read_labelled_directory,
    write_dataset,
)
from .dataset.yolo import parse_yolo_predictions
from .encounters.trajectories import generate_encounters
from .metrics.detection import ImageEvaluation
from .metrics.reports import (
    SimulationSummary,
    compare_summaries,
    comparison_to_csv,
    comparison_to_markdown,
    reports_to_csv,
    reports_to_markdown,
    reports_to_plot_data,
    summarize_results,
)
from .metrics.slicing import FACET_ALIASES, SliceReport, slice_aggregate
from .sim.simulator import run_batch
from .utils.logging import configure_logging

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class ConfigurationFailure(click.ClickException):
    """Invalid configuration or input; exits with status 1."""

    exit_code = EXIT_USAGE


class RuntimeFailure(click.ClickException):
    """A command failed while running; exits with status 2."""

    exit_code = EXIT_RUNTIME


class DaaBenchGroup(click.Group):
    """Group whose usage errors exit with status 1."""

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


@dataclass
class RunContext:
    """Options shared by every subcommand."""

    config: ToolkitConfig
    config_path: Path | None
    seed: int
    workers: int


@contextmanager
def _failures() -> Iterator[None]:
    """Map toolkit errors to the CLI exit-code contract."""
    try:
        yield
    except (ConfigError, UnknownFacetError) as e:
        errors = getattr(e, "validation_errors", [])
        msg = str(e) + "".join(f"\n  {line}" for line in errors)
        raise ConfigurationFailure(msg) from e
    except DaaBenchError as e:
        raise RuntimeFailure(str(e)) from e
    except OSError as e:
        raise RuntimeFailure(str(e)) from e


def _context(
    ctx: click.Context, seed: int | None = None, workers: int | None = None
) -> RunContext:
    run: RunContext = ctx.find_object(RunContext)  # type: ignore[assignment]
    if seed is not None:
        run.seed = seed
    if workers is not None:
        run.workers = workers
    return run


def _manifest(
    command: str,
    run: RunContext,
    started_at: datetime,
    arguments: dict[str, Any],
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    path: Path,
) -> None:
    write_manifest(
        RunManifest(
            command=command,
            tool_version=__version__,
            master_seed=run.seed,
            config=run.config.model_dump(mode="json"),
            arguments={
                key: str(value) if isinstance(value, Path) else value
                for key, value in arguments.items()
            },
            inputs=[str(p) for p in inputs],
            outputs=[str(p) for p in outputs],
            started_at=started_at,
            finished_at=datetime.now(timezone.utc),
        ),
        path,
    )


def _now() -> datetime:
    return datetime.now(timezone.utc)


seed_option = click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    help="Master seed (overrides config)",
)
workers_option = click.option(
    "--workers", type=click.IntRange(min=1), default=None, help="Worker processes"
)


@click.group(cls=DaaBenchGroup)
@click.version_option(version=__version__, prog_name="daa-bench")
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="YAML or JSON configuration file",
)
@seed_option
@workers_option
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="WARNING",
    show_default=True,
)
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    seed: int | None,
    workers: int | None,
    log_level: str,
) -> None:
    """Closed-loop detect-and-avoid simulation and evaluation toolkit."""
    configure_logging(log_level)
    with _failures():
        config = load_config(config_path)
    ctx.obj = RunContext(
        config=config,
        config_path=config_path,
        seed=config.seed if seed is None else seed,
        workers=workers or os.cpu_count() or 1,
    )


@main.group(cls=DaaBenchGroup)
def generate() -> None:
    """Sample encounters or synthetic datasets to files."""


@generate.command("encounters")
@click.option(
    "--n",
    "count",
    type=click.IntRange(min=0),
    default=None,
    help="Number of encounters (factorial: a multiple of 288)",
)
@click.option(
    "--grid",
    type=click.Choice(["factorial", "iid"]),
    default="factorial",
    show_default=True,
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("encounters"),
    show_default=True,
)
@seed_option
@click.pass_context
def generate_encounters_cmd(
    ctx: click.Context, count: int | None, grid: str, out_dir: Path, seed: int | None
) -> None:
    """Sample placed encounters with conditions attached."""
    run = _context(ctx, seed)
    started = _now()
    if grid == "iid" and count is None:
        msg = "--n is required with --grid iid"
        raise click.BadParameter(msg, param_hint="--n")
    with _failures():
        try:
            encounters = generate_encounters(
                run.seed,
                run.config.encounters,
                grid=grid,  # type: ignore[arg-type]
                n=count,
                scene_config=run.config.scene,
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e
        paths = write_encounters(encounters, out_dir)
        _manifest(
            "generate encounters",
            run,
            started,
            {"n": count, "grid": grid, "out": out_dir},
            [],
            paths,
            out_dir / "manifest.json",
        )
    click.echo(f"Wrote {len(paths)} encounters to {out_dir}")


@generate.command("dataset")
@click.option(
    "--n", "count", type=click.IntRange(min=1), required=True, help="Number of samples"
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("dataset"),
    show_default=True,
)
@seed_option
@click.pass_context
def generate_dataset_cmd(
    ctx: click.Context, count: int, out_dir: Path, seed: int | None
) -> None:
    """Generate labels and metadata stratified over weather, region and aircraft."""
    run = _context(ctx, seed)
    started = _now()
    dataset_config = run.config.dataset
    with _failures():
        samples = generate_synthetic_dataset(
            count, run.seed, run.config.scene, dataset_config
        )
        paths = write_dataset(samples, out_dir, dataset_config.label_decimals)
        _manifest(
            "generate dataset",
            run,
            started,
            {"n": count, "out": out_dir},
            [],
            paths,
            out_dir / "manifest.json",
        )
    click.echo(f"Wrote {len(samples)} samples to {out_dir / 'labels'}")


@main.command()
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=Path("policy.avdp"),
    show_default=True,
)
@click.option(
    "--tolerance",
    type=click.FloatRange(min=0.0, min_open=True),
    default=None,
    help="Convergence tolerance (overrides config)",
)
@click.option(
    "--csv",
    "csv_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Also export the Q-table as CSV",
)
@click.pass_context
def solve(
    ctx: click.Context, out_path: Path, tolerance: float | None, csv_path: Path | None
) -> None:
    """Build and solve the avoidance MDP, then write the policy table."""
    run = _context(ctx)
    started = _now()
    with _failures():
        spec = build_mdp(run.config.mdp)
        table = value_iteration(spec, tolerance)
        save_table(table, out_path)
        outputs = [out_path]
        if csv_path is not None:
            export_table_csv(table, csv_path)
            outputs.append(csv_path)
        _manifest(
            "solve",
            run,
            started,
            {"tolerance": tolerance},
            [],
            outputs,
            out_path.with_name(out_path.name + ".manifest.json"),
        )
    table_view = Table(title="Value iteration")
    table_view.add_column("Nodes", justify="right")
    table_view.add_column("Iterations", justify="right")
    table_view.add_column("Residual", justify="right")
    table_view.add_row(
        str(spec.n_nodes), str(table.iterations), f"{table.residual:.3e}"
    )
    Console().print(table_view)
    click.echo(f"Wrote policy table to {out_path}")


_REPORT_COLUMNS = (
    "n",
    "nmac_freq",
    "nmac_se",
    "alert_freq",
    "alert_se",
    "precision",
    "recall",
    "map",
)


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    return f"{value:.4f}" if isinstance(value, float) else str(value)


def _print_reports(title: str, reports: Sequence[SliceReport]) -> None:
    columns = [
        c
        for c in _REPORT_COLUMNS
        if c == "n" or any(getattr(r, c) is not None for r in reports)
    ]
    view = Table(title=title)
    view.add_column("Slice")
    for column in columns:
        view.add_column(column, justify="right")
    for report in reports:
        cells = [_format_cell(getattr(report, column)) for column in columns]
        view.add_row(report.key.value, *cells)
    Console().print(view)


def _print_summary(summary: SimulationSummary) -> None:
    _print_reports("Overall", [summary.overall])
    for facet, reports in summary.facets.items():
        _print_reports(facet.value, reports)


facet_choice = click.Choice(sorted(FACET_ALIASES), case_sensitive=False)


@main.command()
@click.option(
    "--encounters",
    "encounters_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
)
@click.option(
    "--policy",
    "policy_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Policy table; omit to fly unequipped (always COC)",
)
@click.option(
    "--perception",
    type=click.Choice([k.value for k in PerceptionBackendKind]),
    default=None,
    help="Perception backend (overrides config)",
)
@click.option(
    "--probability-scale",
    type=click.FloatRange(min=0.0),
    default=None,
    help="Scale on stochastic detection probabilities",
)
@click.option(
    "--facet",
    "facets",
    type=facet_choice,
    multiple=True,
    help="Facets to slice the summary by",
)
@click.option(
    "--interpolate-nmac/--no-interpolate-nmac",
    default=None,
    help="Check NMAC between steps too",
)
@click.option(
    "--steps/--no-steps",
    default=True,
    show_default=True,
    help="Include per-step records in results",
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("results"),
    show_default=True,
)
@seed_option
@workers_option
@click.pass_context
def simulate(
    ctx: click.Context,
    encounters_dir: Path,
    policy_path: Path | None,
    perception: str | None,
    probability_scale: float | None,
    facets: tuple[str, ...],
    interpolate_nmac: bool | None,
    steps: bool,
    out_dir: Path,
    seed: int | None,
    workers: int | None,
) -> None:
    """Run encounters in closed loop and summarize NMAC and alert frequencies."""
    run = _context(ctx, seed, workers)
    started = _now()
    perception_config = run.config.perception
    if perception is not None:
        perception_config = perception_config.model_copy(
            update={"backend": PerceptionBackendKind(perception)}
        )
    if probability_scale is not None:
        perception_config = perception_config.model_copy(
            update={"probability_scale": probability_scale}
        )
    sim_config = run.config.simulation
    if interpolate_nmac is not None:
        sim_config = sim_config.model_copy(
            update={"interpolate_nmac": interpolate_nmac}
        )
    config = run.config.model_copy(
        update={"perception": perception_config, "simulation": sim_config}
    )
    run.config = config

    with _failures():
        encounters = read_encounters(encounters_dir)
        if not encounters:
            msg = f"No encounter files in {encounters_dir}"
            raise ConfigError(msg)
        policy: PolicyTable | None = (
            load_table(policy_path) if policy_path is not None else None
        )
        batch = run_batch(
            encounters,
            perception_config,
            policy,
            sim_config,
            workers=run.workers,
            master_seed=run.seed,
            config_snapshot=config.model_dump(mode="json"),
        )
        if not batch.results:
            msg = f"All {len(batch.failures)} encounters failed"
            raise RuntimeFailure(msg)
        summary = summarize_results(
            batch.results,
            facets,
            run.seed,
            perception_config.backend.value,
            len(batch.failures),
        )
        results_path = out_dir / "results.jsonl"
        summary_path = out_dir / "summary.json"
        write_results(batch.results, results_path, include_steps=steps)
        summary_path.write_text(summary_to_json(summary), encoding="utf-8")
        outputs = [results_path, summary_path]
        if batch.failures:
            failures_path = out_dir / "failures.json"
            failures = [f.model_dump(mode="json") for f in batch.failures]
            failures_path.write_text(
                json.dumps(failures, indent=2) + "\n", encoding="utf-8"
            )
            outputs.append(failures_path)
        inputs = [encounters_dir] + ([policy_path] if policy_path else [])
        _manifest(
            "simulate",
            run,
            started,
            {"facets": list(facets), "steps": steps},
            inputs,
            outputs,
            out_dir / "manifest.json",
        )
    _print_summary(summary)


def _evaluations(
    labels_dir: Path, predictions_dir: Path, key_map: dict[str, str], strict: bool
) -> list[ImageEvaluation]:
    labelled = read_labelled_directory(labels_dir, key_map)
    predicted = {path.stem: path for path in predictions_dir.glob("*.txt")}
    missing_predictions = sorted(set(labelled) - set(predicted))
    orphan_predictions = sorted(set(predicted) - set(labelled))
    missing_metadata = sorted(
        stem for stem, (_, metadata) in labelled.items() if metadata is None
    )
    problems = [
        ("labels without predictions", missing_predictions),
        ("predictions without labels", orphan_predictions),
        ("labels without metadata", missing_metadata),
    ]
    for description, stems in problems:
        if not stems:
            continue
        shown = ", ".join(stems[:10])
        if strict:
            msg = f"{len(stems)} {description}: {shown}"
            raise RuntimeFailure(msg)
        logger.warning("Skipping %d %s: %s", len(stems), description, shown)
    evaluations = []
    for stem, (labels, metadata) in labelled.items():
        if metadata is None or stem not in predicted:
            continue
        predictions = parse_yolo_predictions(
            predicted[stem].read_text(encoding="utf-8")
        )
        evaluations.append(
            ImageEvaluation(
                stem=stem,
                conditions=metadata.conditions,
                intruder_range=metadata.intruder_range,
                vertical_offset=metadata.intruder_vertical_offset,
                ground_truth=tuple(label.to_box() for label in labels),
                predictions=tuple(predictions),
            )
        )
    return evaluations


@main.command("eval")
@click.option(
    "--labels",
    "labels_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
    help="Directory of <stem>.txt labels with <stem>.json metadata",
)
@click.option(
    "--predictions",
    "predictions_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
    help="Directory of six-column <stem>.txt predictions",
)
@click.option(
    "--facet",
    "facets",
    type=facet_choice,
    multiple=True,
    help="Facets to slice by (default: all)",
)
@click.option("--strict", is_flag=True, help="Abort on unmatched file stems")
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("eval"),
    show_default=True,
)
@click.pass_context
def eval_cmd(
    ctx: click.Context,
    labels_dir: Path,
    predictions_dir: Path,
    facets: tuple[str, ...],
    strict: bool,
    out_dir: Path,
) -> None:
    """Precision, recall and mAP of predictions against labels, sliced by metadata."""
    run = _context(ctx)
    started = _now()
    selected = list(facets) or list(FACET_ALIASES)
    key_map = run.config.dataset.metadata_key_map
    with _failures():
        evaluations = _evaluations(labels_dir, predictions_dir, key_map, strict)
        if not evaluations:
            msg = "No labelled images with predictions to evaluate"
            raise RuntimeFailure(msg)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        plot_data: dict[str, Any] = {}
        all_reports: list[SliceReport] = []
        for facet in selected:
            reports = slice_aggregate(evaluations, facet, run.config.metrics)
            all_reports.extend(reports)
            csv_path = out_dir / f"{facet.lower()}.csv"
            md_path = out_dir / f"{facet.lower()}.md"
            csv_path.write_text(reports_to_csv(reports), encoding="utf-8")
            md_path.write_text(reports_to_markdown(reports), encoding="utf-8")
            outputs.extend([csv_path, md_path])
            plot_data.update(reports_to_plot_data(reports))
        plot_path = out_dir / "plot_data.json"
        plot_path.write_text(
            json.dumps(plot_data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        outputs.append(plot_path)
        _manifest(
            "eval",
            run,
            started,
            {"facets": selected, "strict": strict},
            [labels_dir, predictions_dir],
            outputs,
            out_dir / "manifest.json",
        )
    _print_reports("Detection metrics", all_reports)


def _labels(paths: Sequence[Path], labels: Sequence[str]) -> list[str]:
    if labels:
        if len(labels) != len(paths):
            msg = "give one --label per --summary"
            raise click.BadParameter(msg, param_hint="--label")
        return list(labels)
    names = [path.parent.name or path.stem for path in paths]
    if len(set(names)) != len(names):
        names = [f"{name}#{i + 1}" for i, name in enumerate(names)]
    return names


@main.command()
@click.option(
    "--summary",
    "summary_paths",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    multiple=True,
    required=True,
    help="summary.json from simulate (repeatable)",
)
@click.option(
    "--label", "labels", multiple=True, help="Column label per summary, in order"
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("report"),
    show_default=True,
)
@click.pass_context
def report(
    ctx: click.Context,
    summary_paths: tuple[Path, ...],
    labels: tuple[str, ...],
    out_dir: Path,
) -> None:
    """Merge simulation summaries into a side-by-side comparison."""
    run = _context(ctx)
    started = _now()
    names = _labels(summary_paths, labels)
    with _failures():
        summaries = {
            name: summary_from_json(path.read_text(encoding="utf-8"))
            for name, path in zip(names, summary_paths)
        }
        rows = compare_summaries(summaries)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "comparison.csv"
        md_path = out_dir / "comparison.md"
        csv_path.write_text(comparison_to_csv(rows), encoding="utf-8")
        md_path.write_text(comparison_to_markdown(rows), encoding="utf-8")
        _manifest(
            "report",
            run,
            started,
            {"labels": names},
            list(summary_paths),
            [csv_path, md_path],
            out_dir / "manifest.json",
        )
    view = Table(title="Comparison")
    view.add_column("Facet")
    view.add_column("Value")
    for name in names:
        view.add_column(f"{name} NMAC", justify="right")
        view.add_column(f"{name} alert", justify="right")
    for row in rows:
        cells = []
        for name in names:
            column = row.columns[name]
            for metric in ("nmac", "alert"):
                value = column.get(f"{metric}_freq")
                error = column.get(f"{metric}_se")
                cells.append("" if value is None else f"{value:.3f} ± {error:.3f}")
        view.add_row(row.key.facet.value, row.key.value, *cells)
    Console().print(view)


if __name__ == "__main__":
    main()

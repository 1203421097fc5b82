"""Command-line pipeline: generate, estimate, audit, explain, serve.

Exit codes: 0 success, 1 input/validation error, 2 unexpected runtime
error.  Output files are written atomically (temp file + rename) so a
failing command never leaves a partial artifact.  Set SEQCF_LOG to
error/warn/info/debug to control diagnostics on stderr.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import click

from . import cascade as cascade_mod
from . import naive as naive_mod
from . import propagate as propagate_mod
from . import riskmodel, synth
from .catalog import default_catalog, load_catalog
from .cohort import Period, load_cohort, save_cohort
from .depgraph import estimate_graph, graph_from_json, graph_to_json
from .errors import SeqcfError
from .plausibility import audit_naive, calibrate_epsilon

logger = logging.getLogger("seqcf")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("SEQCF_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory plus atomic rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(out: str | None, text: str) -> None:
    if out:
        atomic_write(out, text)
    else:
        click.echo(text)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SeqcfError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except click.ClickException:
            raise
        except Exception as exc:  # unexpected: engine fault, not input fault
            logger.exception("unexpected failure")
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _load_catalog_opt(path: str | None):
    if path is None:
        return default_catalog()
    return load_catalog(Path(path).read_text())


def _load_cohort_file(path: str, catalog):
    fmt = "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"
    return load_cohort(Path(path).read_text(), catalog, fmt=fmt)


def _load_graph_file(path: str, catalog):
    return graph_from_json(Path(path).read_text(), catalog)


def _load_model_file(path: str):
    return riskmodel.RiskModel.from_json(Path(path).read_text())


@click.group()
def main() -> None:
    """Sequential counterfactual engine for three-period clinical features."""
    _configure_logging()


@main.command("synth")
@click.option("--config", "config_path", type=click.Path(exists=True), help="Generator config JSON.")
@click.option("--out", required=True, type=click.Path(), help="Cohort CSV output path.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@handle_errors
def cmd_synth(config_path: str | None, out: str, seed: int | None) -> None:
    """Generate a calibrated synthetic cohort (plus a calibration report)."""
    if config_path:
        config = synth.SynthConfig.from_json(Path(config_path).read_text())
    else:
        config = synth.SynthConfig()
    if seed is not None:
        config.seed = seed
    config.validate()
    cohort = synth.generate(config)
    report = synth.validate_calibration(cohort, config)
    atomic_write(out, save_cohort(cohort))
    report_path = f"{out}.calibration.json"
    atomic_write(report_path, json.dumps(report.to_json(), indent=2))
    click.echo(f"wrote {cohort.n} patients to {out}")
    click.echo(f"calibration: {'PASS' if report.ok else 'FAIL'} ({report_path})")


@main.command("graph")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--gamma", type=float, default=2.0, show_default=True, help="Relative-risk edge threshold.")
@click.option("--min-support", type=int, default=25, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_graph(cohort_path: str, catalog_path: str | None, gamma: float, min_support: int, out: str) -> None:
    """Estimate the temporal dependency graph and conditional tables."""
    catalog = _load_catalog_opt(catalog_path)
    cohort = _load_cohort_file(cohort_path, catalog)
    graph = estimate_graph(cohort, gamma=gamma, min_support=min_support)
    estimated = [e for e in graph.edges if e.source == "estimated"]
    if not estimated:
        logger.warning("no estimated edges retained (gamma=%s, min_support=%s)", gamma, min_support)
        click.echo("warning: only pathway edges retained", err=True)
    atomic_write(out, json.dumps(graph_to_json(graph), indent=2))
    click.echo(f"wrote graph with {len(graph.edges)} edges ({len(estimated)} estimated) to {out}")


@main.command("audit")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--graph", "graph_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None, help="JSON report path (text goes to stdout).")
@handle_errors
def cmd_audit(cohort_path: str, catalog_path: str | None, graph_path: str | None, out: str | None) -> None:
    """Audit how often naive counterfactuals would violate plausibility."""
    catalog = _load_catalog_opt(catalog_path)
    cohort = _load_cohort_file(cohort_path, catalog)
    graph = _load_graph_file(graph_path, catalog) if graph_path else None
    report = audit_naive(cohort, catalog, graph)
    if out:
        atomic_write(out, json.dumps(report.to_json(), indent=2))
    click.echo(report.render_text())


@main.command("cf")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--patient", "patient_id", required=True)
@click.option("--mode", type=click.Choice(["naive", "sequential"]), default="sequential", show_default=True)
@click.option("--intervention", "interventions", multiple=True,
              help="code@period[:action], e.g. Lisinopril@history or Insulin@past:remove.")
@click.option("--propagation", type=click.Choice(["deterministic", "stochastic"]),
              default="deterministic", show_default=True)
@click.option("--theta", type=float, default=0.5, show_default=True, help="Risk threshold.")
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_cf(cohort_path, catalog_path, graph_path, model_path, patient_id, mode,
           interventions, propagation, theta, samples, seed, out) -> None:
    """Generate one counterfactual for one patient."""
    catalog = _load_catalog_opt(catalog_path)
    cohort = _load_cohort_file(cohort_path, catalog)
    graph = _load_graph_file(graph_path, catalog)
    model = _load_model_file(model_path)
    patient = cohort.patient(patient_id)
    epsilon = calibrate_epsilon(graph, cohort)

    if mode == "naive":
        config = naive_mod.NaiveCfConfig(risk_threshold=theta)
        result = naive_mod.generate_naive(model, patient, config, graph, epsilon)
        if isinstance(result, naive_mod.NotFound):
            click.echo(f"error: {result.message}", err=True)
            sys.exit(1)
    else:
        parsed = [_parse_intervention(spec) for spec in interventions]
        for iv in parsed:
            iv.validate(catalog)
        config = propagate_mod.PropagationConfig(
            mode=propagation, n_samples=samples, seed=seed,
            risk_threshold=theta, epsilon=epsilon,
        )
        result = propagate_mod.propagate(graph, model, patient, parsed, config)

    _emit(out, json.dumps(result.to_json(), indent=2))


def _parse_intervention(spec: str) -> propagate_mod.Intervention:
    body, _, action = spec.partition(":")
    code, sep, period = body.partition("@")
    if not sep or not code or not period:
        raise SeqcfError(
            f"intervention {spec!r} must look like code@period[:action] "
            "(period one of history/past/last)"
        )
    return propagate_mod.Intervention(
        code=code, period=Period.from_suffix(period), action=action or "add"
    )


@main.command("cascade")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
@handle_errors
def cmd_cascade(cohort_path: str, catalog_path: str | None, out: str | None) -> None:
    """Relative-risk cascade and treatment-confounding report."""
    catalog = _load_catalog_opt(catalog_path)
    cohort = _load_cohort_file(cohort_path, catalog)
    report = cascade_mod.full_report(cohort)
    if out:
        atomic_write(out, cascade_mod.report_to_json_text(report))
    click.echo(cascade_mod.render_text(report))


@main.command("train")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--regularization", type=float, default=1.0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def cmd_train(cohort_path: str, catalog_path: str | None, regularization: float, out: str) -> None:
    """Train the outcome risk model and report held-out discrimination."""
    catalog = _load_catalog_opt(catalog_path)
    cohort = _load_cohort_file(cohort_path, catalog)
    train_set, test_set = riskmodel.split_cohort(cohort)
    model = riskmodel.train(train_set, regularization=regularization)
    holdout = riskmodel.auroc(model, test_set)
    atomic_write(out, json.dumps(model.to_json(), indent=2))
    click.echo(f"wrote model to {out}; held-out AUROC {holdout:.3f}")


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8000", show_default=True, help="host:port")
@click.option("--artifacts", "artifacts_dir", required=True, type=click.Path(exists=True),
              help="Directory with catalog.json, cohort.csv, graph.json, model.json.")
@click.option("--allow-origin", default=None, help="CORS origin for the web UI.")
@click.option("--static-dir", type=click.Path(exists=True), default=None,
              help="Serve built UI assets from this directory.")
@handle_errors
def cmd_serve(bind: str, artifacts_dir: str, allow_origin: str | None, static_dir: str | None) -> None:
    """Run the read-only HTTP API over an artifact snapshot."""
    import uvicorn

    from .service import create_app

    host, _, port = bind.partition(":")
    app = create_app(artifacts_dir, allow_origin=allow_origin, static_dir=static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")


if __name__ == "__main__":
    main()

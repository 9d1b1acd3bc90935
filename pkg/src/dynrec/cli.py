"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 ingest failure, 3 unknown entity,
4 evaluation precondition failure.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import archive
from .algos import rules_to_csv, mine_rules
from .config import OPTIONS, Config, ConfigError
from .engine import ALL_ALGORITHMS, Engine, transactions_by_user
from .evaluation import (
    EvaluationError,
    emit_latency,
    emit_report,
    fit_fusion_weights,
    parse_report,
    run_experiment,
)
from .fusion import HYBRID, ranked_to_csv
from .ingest import (
    Dataset,
    ParseError,
    ParseReport,
    dataset_stats,
    format_event_log,
    format_movielens_movies,
    generate_synthetic_dataset,
    parse_event_log,
    parse_movielens_movies,
    parse_movielens_ratings,
)

EXIT_USAGE, EXIT_INGEST, EXIT_UNKNOWN, EXIT_PRECONDITION = 1, 2, 3, 4


class CliFailure(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _config_epilog() -> str:
    lines = ["\b", "Config keys (--config FILE as YAML/JSON, or --set key=value):"]
    for o in OPTIONS:
        default = "unset" if o.default is None else o.default
        lines.append(f"  {o.key} = {default}  ({o.help})")
    return "\n".join(lines)


EPILOG = _config_epilog()


def config_options(f):
    f = click.option(
        "--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one config key."
    )(f)
    f = click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), help="YAML or JSON config file."
    )(f)
    return f


def _load_config(config_path, overrides, **extra) -> Config:
    pairs = list(overrides) + [f"{k}={v}" for k, v in extra.items() if v is not None]
    try:
        return Config.load(config_path, pairs)
    except FileNotFoundError:
        raise CliFailure(f"config file not found: {config_path}", EXIT_USAGE)
    except ConfigError as e:
        raise CliFailure(f"bad config: {e}", EXIT_USAGE)


def _read_input(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise CliFailure(f"cannot read {path}: {e.strerror or e}", EXIT_INGEST)


def _load_dataset(path: str) -> Dataset:
    try:
        return archive.load(path)
    except OSError as e:
        raise CliFailure(f"cannot read dataset {path}: {e.strerror or e}", EXIT_INGEST)
    except (archive.ArchiveError, ValueError) as e:
        raise CliFailure(f"{path}: {e}", EXIT_INGEST)


def _stats_line(d: Dataset, rejects: int = 0) -> str:
    s = dataset_stats(d)
    flag = " catalog_incomplete" if d.catalog_incomplete else ""
    return (
        f"dataset={d.name} users={s.n_users} items={s.n_items} "
        f"interactions={s.n_interactions} rejects={rejects}{flag}"
    )


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Hybrid recommender: content-based, user-based CF and association rules."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command(epilog=EPILOG)
@click.option("--format", "fmt", type=click.Choice(["movielens", "events"]), required=True)
@click.argument("paths", nargs=-1, required=True)
@click.option("-o", "--output", required=True, help="Dataset archive to write.")
@click.option("--catalog", help="movies.dat-style catalog for an event log.")
@click.option("--rejects", help="Write rejected lines as CSV line_number,reason.")
@click.option("--name", help="Dataset id used in reports (default: the format).")
@config_options
def ingest(fmt, paths, output, catalog, rejects, name, config_path, overrides):
    """Parse MovieLens files (RATINGS [MOVIES]) or an event log (EVENTS) into an archive."""
    cfg = _load_config(config_path, overrides)
    limit = cfg["ingest.max_reject_rate"]
    if len(paths) > 2 or (fmt == "events" and len(paths) != 1):
        raise click.UsageError("movielens takes RATINGS [MOVIES]; events takes one EVENTS file")
    sources = [(p, _read_input(p)) for p in paths]
    if catalog:
        if fmt == "movielens" and len(paths) == 2:
            raise click.UsageError("give the catalog either as MOVIES or --catalog, not both")
        sources.append((catalog, _read_input(catalog)))

    report = ParseReport()
    try:
        if fmt == "movielens":
            interactions = parse_movielens_ratings(sources[0][1], max_reject_rate=limit, report=report)
        else:
            interactions = parse_event_log(sources[0][1], max_reject_rate=limit, report=report)
        items = {}
        if len(sources) == 2:
            movie_report = ParseReport()
            items = parse_movielens_movies(sources[1][1], max_reject_rate=limit, report=movie_report)
            for no, msg in movie_report.warnings:
                click.echo(f"warning: {sources[1][0]}:{no}: {msg}", err=True)
            report.rejects.extend(movie_report.rejects)
    except ParseError as e:
        if rejects and e.report is not None:
            Path(rejects).write_bytes(e.report.to_csv())
        raise CliFailure(str(e), EXIT_INGEST)

    if rejects:
        Path(rejects).write_bytes(report.to_csv())
    d = Dataset(interactions, items, name=name or fmt)
    archive.save(d, output)
    click.echo(_stats_line(d, len(report.rejects)))


@cli.command(epilog=EPILOG)
@click.option("--users", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--items", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--events", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", required=True, help="Dataset archive to write.")
@click.option("--events-csv", help="Also write the event log as CSV.")
@click.option("--catalog-out", help="Also write the catalog in movies.dat format.")
def synth(users, items, events, seed, output, events_csv, catalog_out):
    """Generate a seeded synthetic behavior dataset with interest drift."""
    try:
        d = generate_synthetic_dataset(users, items, events, seed)
    except ValueError as e:
        raise CliFailure(str(e), EXIT_USAGE)
    archive.save(d, output)
    if events_csv:
        Path(events_csv).write_bytes(format_event_log(d.interactions))
    if catalog_out:
        Path(catalog_out).write_bytes(format_movielens_movies(d.catalog))
    click.echo(_stats_line(d))


@cli.command(epilog=EPILOG)
@click.argument("dataset")
@click.option("--user", "user_id", type=int, required=True)
@click.option("--algo", type=click.Choice(list(ALL_ALGORITHMS)), default=HYBRID, show_default=True)
@click.option("-n", "top_n", type=click.IntRange(min=1), help="List length (default eval.k).")
@config_options
def recommend(dataset, user_id, algo, top_n, config_path, overrides):
    """Print the top-K list for one user as CSV."""
    cfg = _load_config(config_path, overrides)
    d = _load_dataset(dataset)
    if user_id not in {x.user_id for x in d.interactions}:
        raise CliFailure(f"unknown user {user_id}", EXIT_UNKNOWN)
    n = top_n or cfg["eval.k"]
    weights = None
    if algo == HYBRID:
        weights = fit_fusion_weights(d.interactions, d.catalog, cfg, cfg["eval.seed"])
    engine = Engine(d.interactions, d.catalog, cfg, weights)
    if algo in ("cf", HYBRID) and user_id in engine.matrix and not len(engine.neighborhood(user_id)):
        click.echo(
            f"warning: user {user_id} has no co-rated peers; CF falls back to the user's mean rating",
            err=True,
        )
    click.echo(ranked_to_csv(engine.recommend(user_id, algo, n)).decode(), nl=False)


@cli.command(epilog=EPILOG)
@click.argument("dataset")
@click.option("-o", "--output", help="Rules CSV path (default: stdout).")
@config_options
def mine(dataset, output, config_path, overrides):
    """Mine association rules from per-user baskets (clicks, purchases, liked ratings)."""
    cfg = _load_config(config_path, overrides)
    d = _load_dataset(dataset)
    baskets = transactions_by_user(d.interactions, cfg["eval.relevance_threshold"])
    if not any(len(b) >= 2 for b in baskets.values()):
        raise CliFailure("no user has two or more basket items; nothing to mine", EXIT_PRECONDITION)
    rules = mine_rules(
        list(baskets.values()),
        cfg["rules.min_support"],
        cfg["rules.min_confidence"],
        max_len=cfg["rules.max_len"],
        max_consequent=cfg["rules.max_consequent"],
    )
    data = rules_to_csv(rules)
    if output:
        Path(output).write_bytes(data)
        click.echo(f"rules={len(rules)} transactions={len(baskets)}", err=True)
    else:
        click.echo(data.decode(), nl=False)


@cli.command(epilog=EPILOG)
@click.argument("dataset")
@click.option("--out-dir", default=".", show_default=True, help="Where report files go.")
@click.option("--seed", type=int, help="Shortcut for --set eval.seed=N.")
@click.option("--folds", type=int, help="Shortcut for --set eval.folds=N.")
@click.option("--latency/--no-latency", default=True, show_default=True,
              help="Time each algorithm and write latency.csv.")
@click.option("--embed-latency", is_flag=True,
              help="Also put mean latency into report.csv/json (the report is then no longer reproducible).")
@config_options
def evaluate(dataset, out_dir, seed, folds, latency, embed_latency, config_path, overrides):
    """Cross-validate all algorithms and write report.csv / report.json."""
    extra = {"eval.seed": seed}
    if folds is not None:
        if folds < 2:
            raise CliFailure(f"--folds must be >= 2, got {folds}", EXIT_PRECONDITION)
        extra["eval.folds"] = folds
    cfg = _load_config(config_path, overrides, **extra)
    d = _load_dataset(dataset)
    try:
        report = run_experiment(d, cfg, with_latency=latency or embed_latency)
    except EvaluationError as e:
        raise CliFailure(str(e), EXIT_PRECONDITION)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stable = report if embed_latency else report.without_latency()
    (out / "report.csv").write_bytes(emit_report(stable, "csv"))
    (out / "report.json").write_bytes(emit_report(stable, "json"))
    if latency or embed_latency:
        (out / "latency.csv").write_bytes(emit_latency(report))
    click.echo(emit_report(stable, "csv").decode(), nl=False)


@cli.command()
@click.argument("report_json")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def report(report_json, fmt):
    """Re-emit a saved report.json as CSV or JSON."""
    try:
        r = parse_report(Path(report_json).read_bytes())
    except OSError as e:
        raise CliFailure(f"cannot read {report_json}: {e.strerror or e}", EXIT_USAGE)
    except (ValueError, KeyError) as e:
        raise CliFailure(f"{report_json}: not a report ({e})", EXIT_USAGE)
    click.echo(emit_report(r, fmt).decode(), nl=False)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="dynrec", standalone_mode=False)
    except CliFailure as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())

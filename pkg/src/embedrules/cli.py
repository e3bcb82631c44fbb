"""Command line interface.

Exit codes: 0 success, 2 configuration problem, 3 ingestion/IO problem,
4 degenerate search.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import dataio, pipeline, report
from .cluster import kmeans, sweep_k
from .errors import ConfigError, DegenerateSearch, EmbedRulesError, IngestionMismatch
from .sentiment import batch_features, default_lexicon, load_lexicon

EXIT_CONFIG = 2
EXIT_INGESTION = 3
EXIT_DEGENERATE = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, NotImplementedError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except (IngestionMismatch, FileNotFoundError, OSError, ValueError) as exc:
        _fail(EXIT_INGESTION, str(exc))
    except DegenerateSearch as exc:
        _fail(EXIT_DEGENERATE, str(exc))
    except EmbedRulesError as exc:
        _fail(EXIT_INGESTION, str(exc))


@click.group()
def main():
    """Explain embedding-space clusters with a learned fuzzy rulebase."""


def _load_lexicon(lexicon_dir):
    return load_lexicon(lexicon_dir) if lexicon_dir else default_lexicon()


@main.command()
@click.option("--texts", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON-lines file of {id, text} objects.")
@click.option("--lexicon", "lexicon_dir", type=click.Path(exists=True, file_okay=False),
              help="Directory with lexicon.tsv, negators.txt, intensifiers.tsv.")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def features(texts, lexicon_dir, output):
    """Extract sentiment features from texts into a CSV."""

    def inner():
        pairs = dataio.read_texts_jsonl(texts)
        lex = _load_lexicon(lexicon_dir)
        fm = batch_features([t for _, t in pairs], lex, ids=[i for i, _ in pairs])
        dataio.write_features_csv(output, fm)
        click.echo(f"wrote {len(fm)} feature rows to {output}")

    _guarded(inner)


@main.command()
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--k", type=int, help="Fixed number of clusters.")
@click.option("--k-range", "k_range", type=(int, int), help="Sweep range LO HI (inclusive).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--metric", type=click.Choice(["euclidean", "cosine"]), default="euclidean",
              show_default=True, help="Distance metric (cosine is reserved).")
@click.option("--output-dir", type=click.Path(file_okay=False), required=True)
def cluster(embeddings, k, k_range, seed, restarts, metric, output_dir):
    """Cluster embeddings; with --k-range, pick k by silhouette."""

    def inner():
        if (k is None) == (k_range is None):
            raise ConfigError("provide exactly one of --k or --k-range")
        es = dataio.read_embeddings_csv(embeddings)
        outdir = Path(output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        chosen = k
        if k_range is not None:
            rows, chosen = sweep_k(es, range(k_range[0], k_range[1] + 1), seed=seed,
                                   restarts=restarts, metric=metric)
            dataio.write_silhouette_csv(outdir / "silhouette.csv", rows)
            report.plot_silhouette_sweep(rows, outdir / "silhouette.png", best_k=chosen)
            click.echo(f"silhouette argmax at k={chosen}")
        assignment = kmeans(es, chosen, seed=seed, restarts=restarts, metric=metric)
        dataio.write_clusters_csv(outdir / "clusters.csv", es.ids, assignment.labels)
        click.echo(f"wrote {outdir / 'clusters.csv'} (k={chosen}, inertia={assignment.inertia:.4f})")

    _guarded(inner)


def _config_from_flags(config, seed, overrides, ga_overrides, local_overrides=None):
    doc_overrides = {k: v for k, v in overrides.items() if v is not None}
    doc_overrides["seed"] = seed
    ga_doc = {k: v for k, v in ga_overrides.items() if v is not None}
    if config:
        base = Path(config)
        if base.suffix == ".json":
            doc = json.loads(base.read_text(encoding="utf-8"))
        else:
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            doc = tomllib.loads(base.read_text(encoding="utf-8"))
        base_dir = base.parent
    else:
        doc, base_dir = {}, Path(".")
    doc.update(doc_overrides)
    doc["ga"] = {**doc.get("ga", {}), **ga_doc}
    if local_overrides:
        doc["local"] = {**doc.get("local", {}), **{k: v for k, v in local_overrides.items() if v is not None}}
    return pipeline.RunConfig.from_dict(doc, base_dir=base_dir)


_fit_options = [
    click.option("--config", type=click.Path(exists=True, dir_okay=False),
                 help="TOML or JSON run configuration; flags override it."),
    click.option("--embeddings", type=click.Path(), default=None),
    click.option("--texts", type=click.Path(), default=None),
    click.option("--features", type=click.Path(), default=None),
    click.option("--lexicon", type=click.Path(), default=None),
    click.option("--output-dir", "output_dir", type=click.Path(), default=None),
    click.option("--k", type=int, default=None),
    click.option("--k-range", "k_range", type=(int, int), default=None),
    click.option("--kind", type=click.Choice(["t1", "it2"], case_sensitive=False), default=None),
    click.option("--loss", type=click.Choice(["mcc", "composite"], case_sensitive=False), default=None),
    click.option("--trials", type=int, default=None),
    click.option("--train-fraction", "train_fraction", type=float, default=None),
    click.option("--generations", type=int, default=None),
    click.option("--population", type=int, default=None),
    click.option("--max-rules", "max_rules", type=int, default=None),
    click.option("--max-ants", "max_ants", type=int, default=None),
    click.option("--prune-threshold", "prune_threshold", type=float, default=None),
    click.option("--seed", type=int, required=True, help="Run seed (mandatory)."),
]


def _with_fit_options(fn):
    for option in reversed(_fit_options):
        fn = option(fn)
    return fn


def _collect(kwargs):
    run_keys = ("embeddings", "texts", "features", "lexicon", "output_dir", "k",
                "k_range", "kind", "loss", "trials", "train_fraction")
    ga_keys = ("generations", "population", "max_rules", "max_ants", "prune_threshold")
    run = {k: kwargs[k] for k in run_keys}
    if run.get("k_range") is not None:
        run["k_range"] = list(run["k_range"])
    ga = {k: kwargs[k] for k in ga_keys}
    return run, ga


@main.command()
@_with_fit_options
def fit(config, seed, **kwargs):
    """Cluster, learn a fuzzy rulebase over the trials protocol, write reports."""

    def inner():
        run, ga = _collect(kwargs)
        run_config = _config_from_flags(config, seed, run, ga)
        result = pipeline.run_pipeline(run_config)
        agg = result["aggregate"]
        click.echo(f"k={result['k']}; wrote artifacts to {result['outdir']}")
        click.echo(
            f"accuracy {agg['accuracy'][0]:.3f} +/- {agg['accuracy'][1]:.3f} | "
            f"rules {agg['rule_count'][0]:.2f} +/- {agg['rule_count'][1]:.2f} over "
            f"{len(result['trials'])} trial(s)"
        )

    _guarded(inner)


@main.command()
@_with_fit_options
@click.option("--anchor", type=str, default=None,
              help="Anchor document id, or 'random' (seeded).")
@click.option("--m", type=int, default=None, help="Neighbourhood size (default 1000).")
def local(config, seed, anchor, m, **kwargs):
    """Fit a rulebase on the neighbourhood of one sample."""

    def inner():
        run, ga = _collect(kwargs)
        run_config = _config_from_flags(config, seed, run, ga,
                                        local_overrides={"anchor": anchor, "m": m})
        if run_config.local is None:
            raise ConfigError("local run needs --anchor/--m or a [local] config section")
        result = pipeline.run_local_explanation(run_config)
        click.echo(f"anchor {result['anchor']}: artifacts in {result['outdir']}")

    _guarded(inner)


@main.command()
@click.option("--rulebase", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--features", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--labels", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", type=click.Path(dir_okay=False),
              help="Optional path for the Markdown rule report.")
def evaluate(rulebase, features, labels, output):
    """Re-score a saved rulebase against features + labels files."""

    def inner():
        metrics = pipeline.evaluate(rulebase, features, labels)
        if output:
            Path(output).write_text(metrics["markdown"], encoding="utf-8")
        payload = {k: v for k, v in metrics.items() if k != "markdown"}
        click.echo(json.dumps(payload, indent=2))

    _guarded(inner)


@main.command("report")
@click.option("--run-dir", "run_dir", type=click.Path(exists=True, file_okay=False), required=True)
def report_cmd(run_dir):
    """Re-render figures and Markdown from a run directory's delimited artifacts."""

    def inner():
        outdir = Path(run_dir)
        made = []
        silhouette_csv = outdir / "silhouette.csv"
        if silhouette_csv.exists():
            rows = dataio.read_silhouette_csv(silhouette_csv)
            best_k = max(rows, key=lambda r: (r[1], -r[0]))[0]
            report.plot_silhouette_sweep(rows, outdir / "silhouette.png", best_k=best_k)
            made.append("silhouette.png")
        history_csv = outdir / "history.csv"
        if history_csv.exists():
            report.plot_fitness_history(dataio.read_history_csv(history_csv),
                                        outdir / "fitness.png")
            made.append("fitness.png")
        rulebase_json = outdir / "best_rulebase.json"
        if rulebase_json.exists():
            rb = dataio.load_rulebase(rulebase_json)
            report.plot_partitions(rb.variables, outdir / "partitions.png")
            made.append("partitions.png")
            features_csv = outdir / "features.csv"
            clusters_csv = outdir / "clusters.csv"
            if features_csv.exists() and clusters_csv.exists():
                metrics = pipeline.evaluate(rulebase_json, features_csv, clusters_csv)
                (outdir / "rules.md").write_text(metrics["markdown"], encoding="utf-8")
                made.append("rules.md")
        if not made:
            raise ConfigError(f"{outdir} has no renderable artifacts")
        click.echo("rendered: " + ", ".join(made))

    _guarded(inner)


if __name__ == "__main__":
    main()

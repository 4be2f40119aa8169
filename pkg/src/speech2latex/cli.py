"""Command-line entry points for the pipeline.

Subcommands: ingest, index, query, evaluate, evaluate-grid, serve,
dump-prompt.  Grid and service configuration files are JSON; see README for
the schemas.
"""

import json
import sys

import click

from . import __version__
from .clients import GenerationConfig
from .dataset import load_dataset, save_dataset, split_dataset
from .harness import (
    EL_HIGH,
    EL_LOW,
    ExperimentConfig,
    default_grid,
    render_table,
    rows_to_csv,
    run_grid,
    score_annotations,
)
from .metrics import HumanLabel, bleu, chrf, el_bucket, el_distance, threshold_rates
from .normalizer import NormalizationConfig, default_config, normalize, tokenize_latex
from .prompting import assemble, get_prompt
from .retrieval import Index, build_index, get_provider
from .retrieval import query as run_query


@click.group()
@click.version_option(version=__version__)
def main():
    """Speech-to-LaTeX pipeline tools."""


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--split", "ratios", default="0.7,0.15,0.15", show_default=True,
              help="train,validation,test fractions")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def ingest(path, ratios, seed, out):
    """Load a JSONL corpus, assign splits, and write it back."""
    parts = tuple(float(x) for x in ratios.split(","))
    dataset = load_dataset(path)
    dataset = split_dataset(dataset, parts, seed)
    save_dataset(dataset, out)
    counts = dataset.counts
    click.echo(
        f"wrote {len(dataset)} pairs to {out} "
        f"(train={counts['train']}, validation={counts['validation']}, test={counts['test']})"
    )


@main.command("index")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--split", default="train", show_default=True,
              type=click.Choice(["train", "validation", "test", "train+validation", "all"]))
@click.option("--provider", default="offline", show_default=True)
@click.option("--out", required=True, type=click.Path())
def build_index_cmd(dataset_path, split, provider, out):
    """Embed a dataset split and persist the index as JSON."""
    dataset = load_dataset(dataset_path)
    if split == "all":
        pairs = list(dataset)
    elif split == "train+validation":
        pairs = list(dataset.by_split("train")) + list(dataset.by_split("validation"))
    else:
        pairs = list(dataset.by_split(split))
    index = build_index(pairs, get_provider(provider))
    index.save(out)
    click.echo(f"indexed {len(index)} pairs ({index.provider_id}) -> {out}")


@main.command("query")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True)
@click.option("-k", default=5, show_default=True, type=int)
@click.option("--measure", default="cosine", show_default=True,
              type=click.Choice(["cosine", "euclidean", "manhattan"]))
@click.option("--provider", default="offline", show_default=True)
def query_cmd(index_path, text, k, measure, provider):
    """Rank indexed pairs against a text query."""
    index = Index.load(index_path, provider=get_provider(provider))
    for result in run_query(index, text, k, measure):
        click.echo(f"{result.rank}\t{result.pair_id}\t{result.score:.6f}")


def _load_jsonl(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _load_annotations(path):
    return [HumanLabel(pair_id=str(row["pair_id"]), label=int(row["label"]))
            for row in _load_jsonl(path)]


@main.command()
@click.option("--hyp", "hyp_path", required=True, type=click.Path(exists=True),
              help="JSONL of {id, latex} hypotheses")
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True),
              help="JSONL of {id, latex} references")
@click.option("--annotations", "annotations_path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--raw", is_flag=True, help="score BLEU/chrF on raw latex instead of normalized")
def evaluate(hyp_path, ref_path, annotations_path, out, raw):
    """Batch-score hypothesis latex against references."""
    refs = {str(row["id"]): row["latex"] for row in _load_jsonl(ref_path)}
    hyps = [(str(row["id"]), row["latex"]) for row in _load_jsonl(hyp_path)]
    missing = [pair_id for pair_id, _ in hyps if pair_id not in refs]
    if missing:
        raise click.ClickException(f"hypotheses without references: {missing[:5]}")
    config = default_config()
    scores = []
    lines = ["pair_id,el,bucket"]
    for pair_id, latex in hyps:
        score = el_distance(latex, refs[pair_id], config)
        scores.append((pair_id, score))
        lines.append(f"{pair_id},{score.value:.6f},{el_bucket(score, EL_LOW, EL_HIGH)}")
    if raw:
        hyp_strings = [latex for _, latex in hyps]
        ref_strings = [refs[pair_id] for pair_id, _ in hyps]
    else:
        hyp_strings = [normalize(latex, config) for _, latex in hyps]
        ref_strings = [normalize(refs[pair_id], config) for pair_id, _ in hyps]
    bleu_score = bleu([tokenize_latex(h) for h in hyp_strings],
                      [tokenize_latex(r) for r in ref_strings])
    chrf_score = chrf(hyp_strings, ref_strings)
    lt_low, gt_high = threshold_rates([s for _, s in scores], EL_LOW, EL_HIGH)
    lines.append(f"BLEU,{bleu_score:.2f},")
    lines.append(f"chrF,{chrf_score:.2f},")
    lines.append(f"EL<{EL_LOW},{lt_low:.2f},")
    lines.append(f"EL>{EL_HIGH},{gt_high:.2f},")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(f"scored {len(hyps)} items -> {out}")
    if annotations_path:
        predicted = [(pair_id, el_bucket(score, EL_LOW, EL_HIGH)) for pair_id, score in scores]
        from .metrics import annotation_agreement

        report = annotation_agreement(predicted, _load_annotations(annotations_path))
        click.echo(f"annotation agreement: {report.agreement:.4f} over {report.n_items} items")


def _build_llm(name, dataset, index):
    from .clients import (
        EchoLastExampleClient,
        FixedResponseClient,
        HttpChatClient,
        NearestNeighborClient,
    )
    import os

    if name == "echo-last-example":
        return EchoLastExampleClient()
    if name == "nearest-neighbor":
        return NearestNeighborClient(index, dataset)
    if name.startswith("fixed:"):
        return FixedResponseClient(name[len("fixed:"):])
    if name == "http":
        return HttpChatClient(
            os.environ.get("SPEECH2LATEX_LLM_BASE_URL", ""),
            api_key=os.environ.get("SPEECH2LATEX_LLM_API_KEY", ""),
        )
    raise click.ClickException(f"unknown llm client {name!r}")


@main.command("evaluate-grid")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--grid", "grid_path", type=click.Path(exists=True),
              help="JSON grid config; omit for the default grid")
@click.option("--llm", default="echo-last-example", show_default=True)
@click.option("--provider", default="offline", show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.option("--table", "out_table", type=click.Path())
@click.option("--records-dir", type=click.Path())
@click.option("--annotations", "annotations_path", type=click.Path(exists=True))
@click.option("--sort-by-el", is_flag=True, help="best EL<low row first")
@click.option("--concurrency", type=int, default=None,
              help="in-flight client calls per row (default: 4 for http, 1 for stubs)")
def evaluate_grid(dataset_path, index_path, grid_path, llm, provider, out_csv,
                  out_table, records_dir, annotations_path, sort_by_el, concurrency):
    """Run the experiment grid over the test split."""
    dataset = load_dataset(dataset_path)
    index = Index.load(index_path, provider=get_provider(provider))
    if grid_path:
        with open(grid_path, encoding="utf-8") as fh:
            spec = json.load(fh)
        generation = GenerationConfig(**spec.get("generation", {}))
        configs = [
            ExperimentConfig(
                k=row.get("k", 3),
                measure=row.get("measure", "cosine" if row.get("k", 3) > 0 else None),
                prompt_id=row.get("prompt_id", "p2"),
                generation=generation,
                metrics_on_raw=bool(spec.get("metrics_on_raw", False)),
            )
            for row in spec["rows"]
        ]
    else:
        configs = default_grid()
    if records_dir:
        import os

        os.makedirs(records_dir, exist_ok=True)
    client = _build_llm(llm, dataset, index)
    rows, failures, records = run_grid(
        configs, dataset, index, client,
        out_csv=out_csv, out_table=out_table,
        records_dir=records_dir, sort_by_el=sort_by_el,
        concurrency=concurrency,
    )
    click.echo(render_table(rows), nl=False)
    if failures:
        click.echo(f"{len(failures)} row(s) failed; see log", err=True)
    if annotations_path:
        report = score_annotations(records, _load_annotations(annotations_path))
        click.echo(f"annotation agreement: {report.agreement:.4f} over {report.n_items} items")


@main.command("dump-prompt")
@click.option("--prompt-id", default="p2", show_default=True,
              type=click.Choice(["p1", "p2", "p3"]))
@click.option("--text", required=True, help="query text")
@click.option("--index", "index_path", type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", type=click.Path(exists=True))
@click.option("-k", default=0, show_default=True, type=int)
@click.option("--measure", default="cosine", show_default=True,
              type=click.Choice(["cosine", "euclidean", "manhattan"]))
@click.option("--provider", default="offline", show_default=True)
def dump_prompt(prompt_id, text, index_path, dataset_path, k, measure, provider):
    """Print the exact assembled prompt for audit."""
    examples = []
    if k > 0:
        if not (index_path and dataset_path):
            raise click.ClickException("k > 0 needs --index and --dataset")
        dataset = load_dataset(dataset_path)
        index = Index.load(index_path, provider=get_provider(provider))
        results = run_query(index, text, k, measure)
        examples = [dataset.get(r.pair_id) for r in results]
    prompt = assemble(get_prompt(prompt_id), examples, text)
    click.echo(prompt.render())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_json(config_path) if config_path else ServiceConfig()
    if host:
        config.host = host
    if port:
        config.port = port
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")


if __name__ == "__main__":
    sys.exit(main())

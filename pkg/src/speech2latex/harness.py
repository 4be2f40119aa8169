"""Experiment grid: run (k, measure, prompt) configurations over the test
split and report the four-column results table.

Each row retrieves k examples per test pair (never the pair itself),
assembles the prompt, calls the generation client, extracts the latex, and
scores it.  Aggregates are the percentage of items under the low edit
threshold, the percentage over the high one, corpus BLEU over latex tokens,
and corpus chrF.  Per-item records persist as JSONL for audit and for
scoring against human annotations.

Metrics run on normalized latex by default; ``metrics_on_raw`` switches both
sides to the raw strings.  Aggregation iterates pairs in dataset order
(keyed by pair id), so reruns with deterministic clients are byte-identical.
"""

import csv
import io
import json
import logging
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .clients import GenerationConfig, HttpChatClient, extract_latex, generate
from .dataset import Dataset
from .metrics import (
    AgreementReport,
    HumanLabel,
    annotation_agreement,
    bleu,
    chrf,
    el_bucket,
    el_distance,
    threshold_rates,
)
from .normalizer import default_config, normalize, tokenize_latex
from .prompting import PROMPT_IDS, assemble, get_prompt
from .retrieval import MEASURES, Index, query

logger = logging.getLogger(__name__)

EL_LOW = 0.1
EL_HIGH = 0.4

TABLE_COLUMNS = ("k", "Sim/Dist", "Prompt", "EL<0.1", "EL>0.4", "BLEU", "chrF")
BASELINE_MARK = "–"


class HarnessError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    k: int = 3
    measure: Optional[str] = "cosine"
    prompt_id: str = "p2"
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    index_split: str = "train"
    seed: int = 0
    metrics_on_raw: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise HarnessError(f"k must be >= 0, got {self.k}")
        if self.k == 0:
            self.measure = None
        elif self.measure not in MEASURES:
            raise HarnessError(
                f"measure must be one of {MEASURES} when k > 0, got {self.measure!r}"
            )
        if self.prompt_id not in PROMPT_IDS:
            raise HarnessError(f"prompt_id must be one of {PROMPT_IDS}")


@dataclass(frozen=True)
class ResultRow:
    k: int
    measure: Optional[str]
    prompt_id: str
    el_lt_low: float
    el_gt_high: float
    bleu: float
    chrf: float
    n_items: int


@dataclass(frozen=True)
class ItemRecord:
    pair_id: str
    query: str
    retrieved_ids: tuple
    raw_completion: str
    latex: str
    el: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "pair_id": self.pair_id,
                "query": self.query,
                "retrieved_ids": list(self.retrieved_ids),
                "raw_completion": self.raw_completion,
                "latex": self.latex,
                "el": self.el,
            },
            ensure_ascii=False,
        )


def default_grid(ks=(2, 3, 4, 5, 6), measures=MEASURES, prompts=PROMPT_IDS) -> list:
    """Baseline row plus the full (k, measure, prompt) product."""
    configs = [ExperimentConfig(k=0, measure=None, prompt_id="p1")]
    for k in ks:
        for measure in measures:
            for prompt_id in prompts:
                configs.append(ExperimentConfig(k=k, measure=measure, prompt_id=prompt_id))
    return configs


def _write_records(records: Sequence[ItemRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def run_experiment(
    config: ExperimentConfig,
    dataset: Dataset,
    index: Optional[Index],
    client,
    records_path=None,
    norm_config=None,
    concurrency: Optional[int] = None,
) -> tuple:
    """Run one grid row over the test split; returns (ResultRow, records).

    Items evaluate concurrently up to ``concurrency`` in-flight client calls
    (default: 4 for the HTTP chat client, sequential for stubs); aggregation
    is keyed by pair id, so results do not depend on completion order.  A
    client failure aborts the row after persisting the per-item records
    completed so far (when ``records_path`` is set).
    """
    norm_config = norm_config or default_config()
    test_pairs = dataset.by_split("test")
    if not test_pairs:
        raise HarnessError("dataset has no test split")
    if config.k > 0 and index is None:
        raise HarnessError("k > 0 requires an index")
    if concurrency is None:
        concurrency = 4 if isinstance(client, HttpChatClient) else 1
    instruction = get_prompt(config.prompt_id)

    def evaluate_pair(pair) -> ItemRecord:
        if config.k > 0:
            results = query(
                index,
                pair.nl_text,
                config.k,
                config.measure,
                exclude_ids={pair.id},
            )
            examples = [dataset.get(r.pair_id) for r in results]
            retrieved_ids = tuple(r.pair_id for r in results)
        else:
            examples = []
            retrieved_ids = ()
        prompt = assemble(instruction, examples, pair.nl_text, query_id=pair.id)
        raw = generate(prompt, config.generation, client)
        latex = extract_latex(raw)
        score = el_distance(latex, pair.latex, norm_config)
        return ItemRecord(
            pair_id=pair.id,
            query=pair.nl_text,
            retrieved_ids=retrieved_ids,
            raw_completion=raw,
            latex=latex,
            el=score.value,
        )

    record_by_id = {}

    def ordered_records():
        return [record_by_id[pair.id] for pair in test_pairs if pair.id in record_by_id]

    def run_concurrent():
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = {pool.submit(evaluate_pair, pair): pair for pair in test_pairs}
            done, not_done = wait(futures, return_when=FIRST_EXCEPTION)
            for future in not_done:
                future.cancel()
            first_error = None
            for future in done:
                exc = future.exception()
                if exc is None:
                    record = future.result()
                    record_by_id[record.pair_id] = record
                elif first_error is None:
                    first_error = exc
        if first_error is not None:
            raise first_error

    try:
        if concurrency <= 1:
            for pair in test_pairs:
                record_by_id[pair.id] = evaluate_pair(pair)
        else:
            run_concurrent()
    except Exception:
        if records_path is not None:
            _write_records(ordered_records(), records_path)
            logger.error(
                "row aborted; %d partial records saved to %s",
                len(record_by_id),
                records_path,
            )
        raise
    records = ordered_records()
    if records_path is not None:
        _write_records(records, records_path)

    by_id = {pair.id: pair for pair in test_pairs}
    if config.metrics_on_raw:
        hyp_strings = [r.latex for r in records]
        ref_strings = [by_id[r.pair_id].latex for r in records]
    else:
        hyp_strings = [normalize(r.latex, norm_config) for r in records]
        ref_strings = [normalize(by_id[r.pair_id].latex, norm_config) for r in records]
    lt_low, gt_high = threshold_rates([r.el for r in records], EL_LOW, EL_HIGH)
    row = ResultRow(
        k=config.k,
        measure=config.measure,
        prompt_id=config.prompt_id,
        el_lt_low=lt_low,
        el_gt_high=gt_high,
        bleu=bleu(
            [tokenize_latex(h) for h in hyp_strings],
            [tokenize_latex(r) for r in ref_strings],
        ),
        chrf=chrf(hyp_strings, ref_strings),
        n_items=len(records),
    )
    return row, records


def _cells(row: ResultRow) -> tuple:
    if row.k == 0:
        head = (BASELINE_MARK, BASELINE_MARK, BASELINE_MARK)
    else:
        head = (str(row.k), row.measure.capitalize(), row.prompt_id)
    return head + (
        f"{row.el_lt_low:.2f}",
        f"{row.el_gt_high:.2f}",
        f"{row.bleu:.2f}",
        f"{row.chrf:.2f}",
    )


def render_table(rows: Sequence[ResultRow]) -> str:
    """Aligned text table with exactly the seven result columns."""
    body = [_cells(row) for row in rows]
    widths = [
        max(len(TABLE_COLUMNS[i]), *(len(cells[i]) for cells in body)) if body else len(TABLE_COLUMNS[i])
        for i in range(len(TABLE_COLUMNS))
    ]
    def line(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()

    out = [line(TABLE_COLUMNS), line(tuple("-" * w for w in widths))]
    out.extend(line(cells) for cells in body)
    return "\n".join(out) + "\n"


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    """CSV with the seven result columns plus n_items."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS + ("n_items",))
    for row in rows:
        writer.writerow(_cells(row) + (str(row.n_items),))
    return buf.getvalue()


def sort_rows(rows: Sequence[ResultRow]) -> list:
    """Best EL<low rate first; ties by ascending k."""
    return sorted(rows, key=lambda r: (-r.el_lt_low, r.k))


def run_grid(
    configs: Sequence[ExperimentConfig],
    dataset: Dataset,
    index: Optional[Index],
    client,
    out_csv=None,
    out_table=None,
    records_dir=None,
    sort_by_el: bool = False,
    norm_config=None,
    concurrency: Optional[int] = None,
) -> tuple:
    """Run every config; returns (rows, failures, all_records).

    Individual row failures are recorded as (config, exception) and the
    remaining rows still run.
    """
    if not configs:
        raise HarnessError("empty config list")
    rows = []
    failures = []
    all_records = []
    for i, config in enumerate(configs):
        records_path = None
        if records_dir is not None:
            records_path = f"{records_dir}/records_row{i:03d}.jsonl"
        try:
            row, records = run_experiment(
                config,
                dataset,
                index,
                client,
                records_path=records_path,
                norm_config=norm_config,
                concurrency=concurrency,
            )
        except Exception as exc:
            logger.error("grid row %d failed: %s", i, exc)
            failures.append((config, exc))
            continue
        rows.append(row)
        all_records.extend(records)
    ordered = sort_rows(rows) if sort_by_el else rows
    if out_csv is not None:
        with open(out_csv, "w", encoding="utf-8") as fh:
            fh.write(rows_to_csv(ordered))
    if out_table is not None:
        with open(out_table, "w", encoding="utf-8") as fh:
            fh.write(render_table(ordered))
    return ordered, failures, all_records


def score_annotations(
    records: Sequence[ItemRecord], annotations: Sequence[HumanLabel]
) -> AgreementReport:
    """Bucket each record's EL and compare against human labels."""
    predicted = [(record.pair_id, el_bucket(record.el, EL_LOW, EL_HIGH)) for record in records]
    return annotation_agreement(predicted, annotations)

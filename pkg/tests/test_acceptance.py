"""Acceptance suite: the exit criteria for the primary component.

Each test covers one criterion end to end at its stated tolerance and
prints a single [PASS]/[FAIL] line (run with ``pytest -s`` to see them on
success).  Everything here runs offline against stub clients; no network.
"""

import csv
import random
import string
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from speech2latex.clients import (
    FailingChatClient,
    FailingTranscriber,
    FixedResponseClient,
    FixtureTranscriber,
    NearestNeighborClient,
)
from speech2latex.dataset import Dataset, EquationPair
from speech2latex.harness import (
    BASELINE_MARK,
    TABLE_COLUMNS,
    ExperimentConfig,
    ResultRow,
    render_table,
    rows_to_csv,
    run_experiment,
)
from speech2latex.metrics import bleu, chrf, el_distance, levenshtein
from speech2latex.normalizer import normalize, tokenize_latex
from speech2latex.prompting import PROMPT_IDS, assemble, get_prompt
from speech2latex.retrieval import HashedTrigramProvider, Index, build_index, query, query_vector
from speech2latex.service import create_app

from conftest import make_wav
from oracles import (
    assert_ranking_matches,
    bleu_counting,
    chrf_counting,
    knn_scan,
    levenshtein_dp,
)

DATA_DIR = Path(__file__).parent / "data"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def test_metric_kernels_vs_oracles():
    with criterion("metric kernels vs oracles (1000 pairs, <5s)"):
        levenshtein("warm", "up")  # jit warmup outside the timed region
        rng = random.Random(1234)
        alphabet = string.ascii_letters + string.digits + "+-*/^_{}\\()αβγθπ"
        start = time.perf_counter()
        for _ in range(1000):
            a = "".join(rng.choices(alphabet, k=rng.randint(0, 20)))
            b = "".join(rng.choices(alphabet, k=rng.randint(0, 20)))
            assert levenshtein(a, b) == levenshtein_dp(a, b)
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"kernel comparison took {elapsed:.2f}s"

        assert levenshtein("kitten", "sitting") == 3
        for _ in range(300):
            a = "".join(rng.choices(alphabet, k=rng.randint(0, 25)))
            b = "".join(rng.choices(alphabet, k=rng.randint(0, 25)))
            assert 0.0 <= el_distance(a, b).value <= 1.0


# 27 golden equivalence pairs: each pair must normalize to the same string.
GOLDEN_EQUIVALENT = [
    ("$x + y$", "x + y"),
    ("\\alpha^{2}+\\beta", "a^2+b"),
    ("$$a - b$$", "a-b"),
    ("\\( x \\)", "x"),
    ("\\[ x+1 \\]", "x+1"),
    ("\\begin{equation}E=mc^2\\end{equation}", "E = m c^2"),
    ("\\begin{equation*}y\\end{equation*}", "y"),
    ("\\left( a \\right)", "(a)"),
    ("x ^ { 2 }", "x^2"),
    ("x_{i}", "x_i"),
    ("\\alpha + \\beta", "α + β"),
    ("θ", "\\theta"),
    ("Ω", "\\Omega"),
    ("\\xi", "xi"),
    ("\\chi", "ch"),
    ("\\frac{1}{2}", "\\frac{1}{2}."),
    ("x+y.", "x+y"),
    (",a+b;", "a+b"),
    ("\\sum_{i=1}^{n} i", "\\sum_{i=1}^n i"),
    ("\\sqrt{2}\\quad+\\qquad 1", "\\sqrt{2} + 1"),
    ("\\displaystyle \\int f", "\\int f"),
    ("a \\, b \\; c", "a b c"),
    ("$\\pi r^{2}$", "π r^2"),
    ("\\lim_{x \\to 0} f", "\\lim_{x\\to0}f"),
    ("\\sigma+\\Sigma", "σ + Σ"),
    ("\\frac{a}{b} = c", "\\frac {a} {b}=c"),
    ("$ x $?", "x"),
]

LATEXISH_PARTS = [
    "\\frac", "\\sqrt", "\\sum", "\\int", "\\lim", "\\alpha", "\\theta", "\\sin",
    "x", "y", "z", "12", "3", "+", "-", "=", "(", ")", "{", "}", "^", "_", "α", "π",
]


def test_normalization_suite():
    with criterion("normalization golden pairs + properties (>=25 golden, >=500 random)"):
        assert len(GOLDEN_EQUIVALENT) >= 25
        for left, right in GOLDEN_EQUIVALENT:
            assert normalize(left) == normalize(right), (left, right)
            assert el_distance(left, right).value == 0.0, (left, right)

        rng = random.Random(777)
        for case in range(500):
            n = rng.randint(0, 14)
            s = "".join(
                rng.choice(LATEXISH_PARTS) + rng.choice(["", " ", "  "])
                for _ in range(n)
            )
            once = normalize(s)
            assert normalize(once) == once, f"idempotence broke on {s!r}"
            for wrapped in (
                f"${s}$",
                f"\\({s}\\)",
                f"\\[{s}\\]",
                f"\\begin{{equation}}{s}\\end{{equation}}",
            ):
                assert normalize(wrapped) == once, f"delimiter invariance broke on {s!r}"


def test_bleu_chrf_sanity():
    with criterion("BLEU/chrF sanity vs counting oracle (1e-9)"):
        corpus = [tokenize_latex(s) for s in ("\\frac{a}{b}", "x^2+1", "a")]
        assert bleu(corpus, corpus) == pytest.approx(100.0, abs=1e-9)
        strings = ["\\frac{a}{b}", "x^2+1", "a"]
        assert chrf(strings, strings) == pytest.approx(100.0, abs=1e-9)

        assert chrf(["abc", "de"], ["xyz", "fg"]) == 0.0

        hyp_tokens = [["a", "+", "b"]]
        ref_tokens = [["a", "+", "c"]]
        assert bleu(hyp_tokens, ref_tokens) == pytest.approx(
            bleu_counting(hyp_tokens, ref_tokens), abs=1e-9
        )
        assert bleu(hyp_tokens, ref_tokens) == pytest.approx(63.89431042462724, abs=1e-9)
        assert chrf(["a+b"], ["a+c"]) == pytest.approx(
            chrf_counting(["a+b"], ["a+c"]), abs=1e-9
        )
        assert chrf(["a+b"], ["a+c"]) == pytest.approx(38.888888888888886, abs=1e-9)

        rng = np.random.default_rng(42)
        vocab = ["a", "b", "x", "+", "-", "=", "\\frac", "{", "}", "2"]
        for _ in range(25):
            n = int(rng.integers(1, 7))
            hyp_t = [list(rng.choice(vocab, size=rng.integers(1, 10))) for _ in range(n)]
            ref_t = [list(rng.choice(vocab, size=rng.integers(1, 10))) for _ in range(n)]
            assert bleu(hyp_t, ref_t) == pytest.approx(bleu_counting(hyp_t, ref_t), abs=1e-9)
            hyp_s = ["".join(t) for t in hyp_t]
            ref_s = ["".join(t) for t in ref_t]
            assert chrf(hyp_s, ref_s) == pytest.approx(chrf_counting(hyp_s, ref_s), abs=1e-9)


def test_retrieval_correctness():
    with criterion("retrieval vs linear-scan oracle (100 indices, <10s)"):
        provider = HashedTrigramProvider()
        provider.embed("warmup")
        rng = random.Random(2025)
        start = time.perf_counter()
        for trial in range(100):
            n = rng.randint(2, 50)
            texts = [
                f"κείμενο {trial}-{i} "
                + "".join(rng.choices("αβγδεζηθικλμν ", k=rng.randint(3, 12)))
                for i in range(n)
            ]
            assert len(set(texts)) == n
            ids = [f"t{trial}-{i}" for i in range(n)]
            vectors = [provider.embed(t) for t in texts]
            index = Index(ids, np.vstack(vectors), provider.provider_id, provider=provider)
            entries = list(zip(ids, vectors))

            # oracle equivalence on two random queries per index, all
            # measures, over the full ranking (mathematically tied entries
            # compare as groups; see assert_ranking_matches)
            for _ in range(2):
                qtext = "ερώτημα " + "".join(rng.choices("αβγδεζη ", k=rng.randint(2, 10)))
                qvec = provider.embed(qtext)
                for measure in ("cosine", "euclidean", "manhattan"):
                    got = query_vector(index, qvec, k=n, measure=measure)
                    want = knn_scan(entries, qvec, n, measure)
                    assert_ranking_matches([r.pair_id for r in got], want)

            # self-retrieval rank 1 for every entry under every measure
            for i, text in enumerate(texts):
                for measure in ("cosine", "euclidean", "manhattan"):
                    top = query(index, text, k=1, measure=measure)[0]
                    assert top.pair_id == ids[i], (trial, i, measure)

            # unit-norm vectors: cosine and euclidean rank orders coincide.
            # Texts share a prefix with the query but carry graded-length
            # tails, so all cosine values are mathematically distinct; the
            # gap guard keeps the instance clear of ulp-level ties, where
            # the two float kernels would order an exact-tie cluster
            # arbitrarily (each is deterministic, but not identically).
            m = rng.randint(5, 25)
            filler = rng.choice("χψωφσδ")
            graded = [f"βάση {trial} " + filler * (i + 1) for i in range(m)]
            graded_ids = [f"g{trial}-{i}" for i in range(m)]
            graded_vecs = [provider.embed(t) for t in graded]
            graded_index = Index(
                graded_ids, np.vstack(graded_vecs), provider.provider_id, provider=provider
            )
            qvec = provider.embed(f"βάση {trial} ερώτημα")
            cos_results = query_vector(graded_index, qvec, k=m, measure="cosine")
            euc_results = query_vector(graded_index, qvec, k=m, measure="euclidean")
            cos_scores = [r.score for r in cos_results]
            gaps = [a - b for a, b in zip(cos_scores, cos_scores[1:])]
            assert all(g > 1e-9 for g in gaps), "degenerate instance: tied cosines"
            assert [r.pair_id for r in cos_results] == [r.pair_id for r in euc_results]
            cos_by_id = {r.pair_id: r.score for r in cos_results}
            for r in euc_results:
                assert r.score * r.score == pytest.approx(2 - 2 * cos_by_id[r.pair_id], abs=1e-9)

            # strict top-k cut on the well-separated instance
            half = max(1, m // 2)
            graded_entries = list(zip(graded_ids, graded_vecs))
            for measure in ("cosine", "euclidean", "manhattan"):
                got = query_vector(graded_index, qvec, k=half, measure=measure)
                want = knn_scan(graded_entries, qvec, half, measure)
                assert [r.pair_id for r in got] == [pid for pid, _ in want]

        # exact-tie coverage: bitwise-duplicated vectors must break ties by
        # position.  Base texts are graded so every non-duplicate score is
        # mathematically distinct.
        for trial in range(10):
            base = [provider.embed(f"μοναδικό {trial} " + "κ" * (i + 1)) for i in range(8)]
            vectors = base + [base[1].copy(), base[1].copy()]
            ids = [f"d{i}" for i in range(10)]
            index = Index(ids, np.vstack(vectors), provider.provider_id, provider=provider)
            entries = list(zip(ids, vectors))
            qvec = base[1]
            for measure in ("cosine", "euclidean", "manhattan"):
                got = query_vector(index, qvec, k=10, measure=measure)
                want = knn_scan(entries, qvec, 10, measure)
                assert [r.pair_id for r in got] == [pid for pid, _ in want]
                assert [r.pair_id for r in got[:3]] == ["d1", "d8", "d9"]

        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"retrieval checks took {elapsed:.2f}s"


def _pipeline_corpus():
    """40 unique train pairs; the first 12 duplicated as the test split."""
    latexes = [
        "\\alpha + \\beta", "x^{2}", "\\frac{1}{2}", "\\sqrt{2}",
        "\\sum_{i=1}^{n} i", "\\int f(x) dx", "\\lim_{x \\to 0} f(x)", "\\sin(x)",
        "a - b", "\\frac{a}{b} = c", "e^{i\\pi} + 1 = 0", "\\sqrt{x+y}",
        "x_{n+1} = x_n + 1", "\\cos(2x)", "\\tan(\\theta)", "\\log(n)",
        "n!", "\\binom{n}{k}", "\\pi r^{2}", "a^2 + b^2 = c^2",
        "\\frac{dy}{dx}", "\\nabla f", "\\partial_t u", "\\sum k^2",
        "\\prod_{i} a_i", "\\max(a, b)", "\\min(x, y)", "|x|",
        "\\langle u, v \\rangle", "\\vec{v}", "\\bar{x}", "\\hat{y}",
        "\\frac{n(n+1)}{2}", "2^n", "\\sqrt[3]{x}", "\\infty",
        "\\pm 1", "\\approx 3.14", "\\neq 0", "\\leq 1",
    ]
    train = [
        EquationPair(f"tr{i}", f"περιγραφή εξίσωσης νούμερο {i}", latex, split="train")
        for i, latex in enumerate(latexes)
    ]
    test = [
        EquationPair(f"te{i}", train[i].nl_text, train[i].latex, split="test")
        for i in range(12)
    ]
    return Dataset(train + test), train


def test_end_to_end_stub_pipeline():
    with criterion("end-to-end stub pipeline (k=2..6 perfect, wrong-stub hand-scored, <30s)"):
        start = time.perf_counter()
        dataset, train = _pipeline_corpus()
        index = build_index(train, HashedTrigramProvider())
        nn_client = NearestNeighborClient(index, dataset)

        for k in (2, 3, 4, 5, 6):
            for measure in ("cosine", "euclidean", "manhattan"):
                config = ExperimentConfig(k=k, measure=measure, prompt_id="p2")
                row, records = run_experiment(config, dataset, index, nn_client)
                assert row.el_lt_low == 100.0, (k, measure)
                assert row.el_gt_high == 0.0, (k, measure)
                assert row.bleu == pytest.approx(100.0, abs=1e-9), (k, measure)
                assert row.chrf == pytest.approx(100.0, abs=1e-9), (k, measure)
                assert row.n_items == 12
                for record in records:
                    assert record.pair_id not in record.retrieved_ids

        # deliberately wrong constant output, hand-scored with the DP oracle
        wrong = FixedResponseClient("z")
        config = ExperimentConfig(k=0, prompt_id="p1")
        row, records = run_experiment(config, dataset, index, wrong)
        expected = []
        for pair in dataset.by_split("test"):
            ref_norm = normalize(pair.latex)
            expected.append(levenshtein_dp("z", ref_norm) / max(len(ref_norm), 1))
        assert [r.el for r in records] == pytest.approx(expected)
        hand_above = 100.0 * sum(1 for e in expected if e > 0.4) / len(expected)
        assert row.el_gt_high == pytest.approx(hand_above, abs=1e-12)

        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"pipeline checks took {elapsed:.2f}s"


def test_table_reproduction_format():
    with criterion("results table format (7 columns, dashed baseline, fixture-only values)"):
        with open(DATA_DIR / "results_format_fixture.csv", encoding="utf-8") as fh:
            fixture = list(csv.reader(fh))
        header, body = fixture[0], fixture[1:]
        assert header == list(TABLE_COLUMNS) + ["n_items"]

        rows = []
        for cells in body:
            baseline = cells[0] == BASELINE_MARK
            rows.append(
                ResultRow(
                    k=0 if baseline else int(cells[0]),
                    measure=None if baseline else cells[1].lower(),
                    prompt_id="p1" if baseline else cells[2],
                    el_lt_low=float(cells[3]),
                    el_gt_high=float(cells[4]),
                    bleu=float(cells[5]),
                    chrf=float(cells[6]),
                    n_items=int(cells[7]),
                )
            )
        # round-trip through the production renderers
        rendered_csv = rows_to_csv(rows)
        assert rendered_csv.splitlines()[0] == "k,Sim/Dist,Prompt,EL<0.1,EL>0.4,BLEU,chrF,n_items"
        assert rendered_csv.splitlines()[1].startswith(f"{BASELINE_MARK},{BASELINE_MARK},{BASELINE_MARK},27.45,24.84,39.54,60.58")
        table = render_table(rows)
        lines = table.splitlines()
        assert lines[0].split() == list(TABLE_COLUMNS)
        assert lines[2].split()[:3] == [BASELINE_MARK] * 3

        # the reported numbers are fixtures, not reproducible outputs: the
        # best row exists in the fixture with its published coordinates
        best = [r for r in rows if r.el_lt_low == 37.67]
        assert len(best) == 1
        assert (best[0].k, best[0].measure, best[0].prompt_id) == (5, "cosine", "p2")


def test_prompt_fidelity():
    with criterion("prompt fidelity (byte-identical fixtures, 200 assembly cases)"):
        from importlib import resources

        for prompt_id in PROMPT_IDS:
            fixture = resources.files("speech2latex").joinpath(f"prompts/{prompt_id}.txt")
            assert get_prompt(prompt_id).text.encode("utf-8") == fixture.read_bytes()
        assert get_prompt("p1").text.startswith("You are a LaTeX equation generator.")
        assert get_prompt("p2").text.endswith("for the last query.")
        assert get_prompt("p3").text.startswith("Είσαι")

        rng = random.Random(4242)
        corpus = [
            EquationPair(f"c{i}", f"πρόταση {i}", f"y_{{{i}}}") for i in range(40)
        ]
        from speech2latex.prompting import PromptError

        for case in range(200):
            k = rng.randint(0, 6)
            examples = rng.sample(corpus, k)
            query_pair = rng.choice(corpus)
            prompt_id = rng.choice(PROMPT_IDS)
            if query_pair.id in {e.id for e in examples}:
                with pytest.raises(PromptError):
                    assemble(get_prompt(prompt_id), examples, query_pair.nl_text, query_id=query_pair.id)
                continue
            first = assemble(get_prompt(prompt_id), examples, query_pair.nl_text, query_id=query_pair.id)
            second = assemble(get_prompt(prompt_id), examples, query_pair.nl_text, query_id=query_pair.id)
            assert first == second
            assert first.render() == second.render()
            assert query_pair.id not in {e.id for e in examples}


def test_service_composition_law():
    with criterion("service composition law + error-stage discrimination"):
        dataset, train = _pipeline_corpus()
        index = build_index(train, HashedTrigramProvider())

        fixtures = []
        transcriber = FixtureTranscriber()
        for i, freq in enumerate((330.0, 440.0, 550.0)):
            audio = make_wav(duration_s=0.2 + 0.05 * i, freq=freq)
            transcriber.register(audio, train[i].nl_text)
            fixtures.append(audio)

        app = create_app(
            dataset=dataset,
            index=index,
            transcriber=transcriber,
            chat_client=NearestNeighborClient(index, dataset),
        )
        with TestClient(app) as client:
            for audio in fixtures:
                combined = client.post(
                    "/api/speech-to-latex", files={"file": ("a.wav", audio, "audio/wav")}
                )
                assert combined.status_code == 200
                step1 = client.post(
                    "/api/transcribe", files={"file": ("a.wav", audio, "audio/wav")}
                ).json()
                step2 = client.post("/api/generate", json={"text": step1["text"]}).json()
                assert combined.json()["text"] == step1["text"]
                assert combined.json()["latex"] == step2["latex"]
                assert combined.json()["examples"] == step2["examples"]

        # failure injection point 1: ASR
        app_asr_down = create_app(
            dataset=dataset,
            index=index,
            transcriber=FailingTranscriber(),
            chat_client=NearestNeighborClient(index, dataset),
        )
        with TestClient(app_asr_down) as client:
            resp = client.post(
                "/api/speech-to-latex", files={"file": ("a.wav", fixtures[0], "audio/wav")}
            )
            assert resp.status_code == 502
            assert resp.json()["stage"] == "transcription"

        # failure injection point 2: LLM (transcription must survive)
        app_llm_down = create_app(
            dataset=dataset, index=index, transcriber=transcriber, chat_client=FailingChatClient()
        )
        with TestClient(app_llm_down) as client:
            resp = client.post(
                "/api/speech-to-latex", files={"file": ("a.wav", fixtures[0], "audio/wav")}
            )
            assert resp.status_code == 502
            body = resp.json()
            assert body["stage"] == "generation"
            assert body["text"] == train[0].nl_text

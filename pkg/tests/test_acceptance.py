"""System-level acceptance checks.

Closed-form metrics run against enumeration oracles, retrieval against a
brute-force scan, the campaign loop against invariants on fuzzed corpora,
the CLI pipeline against committed goldens, and the target-selection
strategies against each other on a corpus with a planted history signal.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from pathlib import Path

import pytest
from scipy import stats as scipy_stats

from polyrepair.analytics import (
    average_precision_at_k,
    cliffs_delta,
    f1_at_k,
    map_at_k,
    mww_test,
    ndcg_at_k,
    pass_at_k,
    pass_at_k_table,
    precision_at_k,
    recall_at_k,
    validity_lists,
)
from polyrepair.cli import main as cli_main
from polyrepair.core import (
    BugInstance,
    CodeSample,
    LanguageSet,
    Outcome,
    OUTCOME_ORDER,
    ProblemSpec,
    Provenance,
    TestCase,
)
from polyrepair.gateway import (
    FixBand,
    HistoryFollowingBackend,
    ModelGateway,
    StochasticBackend,
)
from polyrepair.harness import (
    MockToolchain,
    SubprocessToolchain,
    available_real_languages,
)
from polyrepair.history import (
    CharacteristicsEncoder,
    HistoryEntry,
    HistorySource,
    HistoryStore,
)
from polyrepair.orchestrator import RunConfig, mean_path_length, run_campaign
from polyrepair.strategy import StrategyKind

from reference_impl import (
    brute_force_cosine_top_k,
    brute_force_pass_at_k,
    ref_average_precision,
    ref_f1,
    ref_ndcg,
    ref_precision,
    ref_recall,
)
from synthetic import LANGUAGES as PLANTED_LANGUAGES
from synthetic import build_corpus, run_strategy

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

TOL = 1e-12


# ---------------------------------------------------------------------------
# Closed-form sampling estimator vs subset enumeration


def test_pass_at_k_matches_subset_enumeration():
    start = time.monotonic()
    for n in range(13):
        for c in range(n + 1):
            for k in range(1, n + 1):
                expected = brute_force_pass_at_k(n, c, k)
                assert math.isclose(pass_at_k(n, c, k), expected, rel_tol=0.0, abs_tol=TOL)
    assert pass_at_k(20, 0, 10) == 0.0
    assert pass_at_k(20, 20, 10) == 1.0
    assert math.isclose(pass_at_k(5, 2, 3), 0.9, rel_tol=0.0, abs_tol=TOL)
    assert time.monotonic() - start < 1.0


# ---------------------------------------------------------------------------
# Ranking metrics vs positional-scan reference, exhaustive over short lists


def _close_or_both_none(got: float | None, expected: float | None) -> bool:
    if got is None or expected is None:
        return got is None and expected is None
    return math.isclose(got, expected, rel_tol=0.0, abs_tol=TOL)


def test_ranking_metrics_match_reference_on_all_short_lists():
    start = time.monotonic()
    checked = 0
    for length in range(1, 9):
        for bits in itertools.product((0, 1), repeat=length):
            rel = list(bits)
            for k in range(1, length + 1):
                assert math.isclose(
                    precision_at_k(rel, k), ref_precision(rel, k), rel_tol=0.0, abs_tol=TOL
                )
                assert _close_or_both_none(recall_at_k(rel, k), ref_recall(rel, k))
                assert math.isclose(f1_at_k(rel, k), ref_f1(rel, k), rel_tol=0.0, abs_tol=TOL)
                assert math.isclose(
                    ndcg_at_k(rel, k), ref_ndcg(rel, k), rel_tol=0.0, abs_tol=TOL
                )
                assert _close_or_both_none(
                    average_precision_at_k(rel, k), ref_average_precision(rel, k)
                )
            checked += 1
    assert checked == 510

    rng = random.Random(7)
    for _ in range(50):
        lists = {
            f"L{i}": [rng.randint(0, 1) for _ in range(8)] for i in range(rng.randint(1, 5))
        }
        for k in (1, 3, 5, 8):
            terms = [
                ap
                for ap in (ref_average_precision(rel, k) for rel in lists.values())
                if ap is not None
            ]
            expected = sum(terms) / len(terms) if terms else None
            assert _close_or_both_none(map_at_k(lists, k), expected)
    assert time.monotonic() - start < 5.0


# ---------------------------------------------------------------------------
# Rank test and effect size vs scipy / pair counting


def test_rank_test_and_effect_size_match_oracles():
    rng = random.Random(13)
    tie_pool = (0.0, 0.25, 0.5, 0.75, 1.0)
    for _ in range(20):
        m, n = rng.randint(2, 30), rng.randint(2, 30)
        x = [rng.choice(tie_pool) if rng.random() < 0.5 else rng.random() for _ in range(m)]
        y = [rng.choice(tie_pool) if rng.random() < 0.5 else rng.random() for _ in range(n)]
        x[0] = 0.9  # guard against a degenerate all-tied pooled sample

        u, p = mww_test(x, y)
        ref = scipy_stats.mannwhitneyu(x, y, alternative="two-sided", method="asymptotic")
        assert math.isclose(u, float(ref.statistic), rel_tol=0.0, abs_tol=1e-9)
        assert math.isclose(p, float(ref.pvalue), rel_tol=0.0, abs_tol=1e-6)

        delta = cliffs_delta(x, y)
        greater = sum(1 for a in x for b in y if a > b)
        less = sum(1 for a in x for b in y if a < b)
        assert delta == (greater - less) / (m * n)
        assert cliffs_delta(y, x) == -delta
        assert -1.0 <= delta <= 1.0

    # pairs: one x>y, six x<y, two tied, so (1 - 6) / 9
    assert math.isclose(
        cliffs_delta([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]), -5.0 / 9.0, rel_tol=0.0, abs_tol=TOL
    )


# ---------------------------------------------------------------------------
# Retrieval vs brute-force cosine scan


def _composite_key(bug_id: str, iteration: int) -> str:
    return f"{bug_id}|{iteration:03d}"


def test_retrieval_matches_brute_force_scan():
    pool = ("C", "Go", "Java", "Kotlin", "PHP", "Python", "Ruby", "Rust")
    broken = [o for o in OUTCOME_ORDER if o is not Outcome.PASSED]
    errors = ("off by one", "bad cast", "overflow", "null deref", "regex busy loop")

    for round_index in range(100):
        rng = random.Random(4000 + round_index)
        languages = LanguageSet(tuple(rng.sample(pool, rng.randint(3, 6))))
        encoder = CharacteristicsEncoder(languages)
        store = HistoryStore(encoder)

        count = rng.randint(1, 1000)
        traits: list[tuple[str, int, Outcome, str]] = []
        batch: list[HistoryEntry] = []
        used: set[tuple[str, int]] = set()
        for i in range(count):
            if traits and rng.random() < 0.3:  # repeats force exact similarity ties
                language, difficulty, outcome, error = rng.choice(traits)
            else:
                language = rng.choice(languages.names)
                difficulty = rng.randint(800, 3500)
                outcome = rng.choice(broken)
                error = rng.choice(errors)
                traits.append((language, difficulty, outcome, error))
            if batch and rng.random() < 0.1:
                bug_id = rng.choice(batch).bug_id  # same bug again, later iteration
                source = HistorySource.TRANSLATION_BASED
                iteration = max(it for b, it in used if b == bug_id) + 1
            else:
                bug_id = f"b{i:04d}"
                source = rng.choice((HistorySource.INITIAL_DIRECT, HistorySource.TRANSLATION_BASED))
                iteration = 0 if source is HistorySource.INITIAL_DIRECT else rng.randint(1, 6)
            if (bug_id, iteration) in used:
                continue
            used.add((bug_id, iteration))
            fixed = rng.random() < 0.5
            if source is HistorySource.TRANSLATION_BASED and fixed:
                targets = (rng.choice([l for l in languages.names if l != language]),)
            else:
                targets = ()
            batch.append(
                HistoryEntry(
                    bug_id=bug_id,
                    source=source,
                    source_language=language,
                    difficulty=difficulty,
                    initial_outcome=outcome,
                    error_type=error,
                    fixed=fixed,
                    successful_target_languages=targets,
                    n=20,
                    c=rng.randint(1, 20) if fixed else 0,
                    vector=encoder.encode(language, difficulty, outcome, error),
                    iteration_written=iteration,
                )
            )
        store.upsert_batch(batch)

        query_id = rng.choice(batch).bug_id if rng.random() < 0.5 else "query-x"
        query = BugInstance(
            bug_id=query_id,
            source_language=rng.choice(languages.names),
            code="// broken\n",
            problem=ProblemSpec(
                problem_id="q",
                description="q",
                input_spec="i",
                output_spec="o",
                difficulty=rng.randint(800, 3500),
                tests=(TestCase(input=b"", expected_output=b"1\n"),),
            ),
            initial_outcome=rng.choice(broken),
            error_type=rng.choice(errors),
        )
        k = rng.randint(1, 10)
        result = store.retrieve(query, k)

        query_vector = list(encoder.encode_bug(query))
        for source, neighbors in (
            (HistorySource.INITIAL_DIRECT, result.initial_neighbors),
            (HistorySource.TRANSLATION_BASED, result.translation_neighbors),
        ):
            candidates = [
                (_composite_key(e.bug_id, e.iteration_written), list(e.vector))
                for e in store.entries()
                if e.source is source and e.bug_id != query_id
            ]
            expected = brute_force_cosine_top_k(query_vector, candidates, k)
            got = [(_composite_key(e.bug_id, e.iteration_written), s) for e, s in neighbors]
            assert got == expected


# ---------------------------------------------------------------------------
# Campaign loop invariants on fuzzed corpora, serial vs parallel


def _fuzz_corpus(rng: random.Random, languages: LanguageSet) -> list[BugInstance]:
    broken = [o for o in OUTCOME_ORDER if o is not Outcome.PASSED]
    bugs = []
    for j in range(rng.randint(10, 50)):
        outcome = rng.choice(broken)
        difficulty = rng.randint(800, 3500)
        bugs.append(
            BugInstance(
                bug_id=f"f{j:03d}",
                source_language=rng.choice(languages.names),
                code=f"// @@verdict: {outcome}\n",
                problem=ProblemSpec(
                    problem_id=f"p{j:03d}",
                    description="fuzzed",
                    input_spec="i",
                    output_spec="o",
                    difficulty=difficulty,
                    tests=(TestCase(input=b"1\n", expected_output=b"1\n"),),
                ),
                initial_outcome=outcome,
                error_type=rng.choice(("off by one", "overflow", "bad cast")),
            )
        )
    return bugs


def _fuzz_backend(rng: random.Random, languages: LanguageSet, seed: int) -> StochasticBackend:
    bands = {}
    for language in languages.names:
        if rng.random() < 0.5:
            bands[language] = [FixBand(800, 3500, rng.uniform(0.02, 0.3))]
    return StochasticBackend(
        bands,
        seed,
        default_probability=rng.uniform(0.02, 0.25),
        preserve_probability=rng.uniform(0.7, 1.0),
    )


def test_campaign_invariants_hold_on_fuzzed_corpora():
    pool = ("C", "Go", "Java", "Kotlin", "PHP", "Python", "Ruby", "Rust")
    kinds = (StrategyKind.GREEDY, StrategyKind.RANDOM, StrategyKind.REASONING)

    for case in range(50):
        rng = random.Random(9000 + case)
        languages = LanguageSet(tuple(rng.sample(pool, rng.randint(3, 5))))
        bugs = _fuzz_corpus(rng, languages)
        kind = kinds[case % len(kinds)]
        sample_count = rng.randint(2, 6)
        config = RunConfig(
            strategy=kind,
            sample_count=sample_count,
            pass_k=rng.randint(1, sample_count),
            max_iterations=rng.choice((None, None, rng.randint(1, 6))),
            seed=case,
            parallelism=1,
        )

        def one_run(parallelism: int):
            backend = _fuzz_backend(random.Random(9000 + case), languages, seed=case)
            if kind is StrategyKind.REASONING:
                gateway = ModelGateway(HistoryFollowingBackend(backend))
            else:
                gateway = ModelGateway(backend)
            store = HistoryStore(CharacteristicsEncoder(languages))
            run_config = RunConfig.from_dict({**config.to_dict(), "parallelism": parallelism})
            result = run_campaign(
                bugs=bugs,
                languages=languages,
                config=run_config,
                gateway=gateway,
                toolchain=MockToolchain(),
                history_store=store,
            )
            return result, store

        serial, store_serial = one_run(1)
        parallel, store_parallel = one_run(8)

        assert serial.ledger.to_jsonl() == parallel.ledger.to_jsonl()
        assert serial.state.to_dict() == parallel.state.to_dict()
        assert store_serial.export_jsonl() == store_parallel.export_jsonl()
        assert serial.initial_table == parallel.initial_table
        assert serial.log == parallel.log

        assert serial.iterations_run <= config.resolved_max_iterations(languages)
        rows_by_bug: dict[str, list] = {}
        for row in serial.ledger:
            rows_by_bug.setdefault(row.bug_id, []).append(row)

        for bug in bugs:
            camp = serial.state.campaign(bug.bug_id)
            rows = rows_by_bug[bug.bug_id]
            iterations = [row.iteration for row in rows]
            assert iterations == sorted(iterations)
            assert len(set(iterations)) == len(iterations)
            assert iterations[0] == 0

            targets = camp.attempted_targets
            assert len(set(targets)) == len(targets)
            assert bug.source_language not in targets
            assert all(t in languages for t in targets)

            if camp.fixed:
                assert camp.fixed_iteration is not None
                assert max(iterations) == camp.fixed_iteration
                n, c = camp.tallies[camp.fixed_iteration]
                assert c >= 1
            else:
                assert all(row.c == 0 for row in rows)
                assert max(iterations) < serial.iterations_run

            for row in rows:
                assert row.n == sample_count
                if row.target_language is not None:
                    assert row.target_language in row.candidates
                    assert row.target_language != bug.source_language


# ---------------------------------------------------------------------------
# Full CLI pipeline vs committed goldens


def test_demo_pipeline_reproduces_goldens(tmp_path):
    start = time.monotonic()
    run_dir = tmp_path / "run"
    config = FIXTURES / "demo" / "config.json"
    assert cli_main(["run", "--config", str(config), "--out", str(run_dir)]) == 0
    assert cli_main(["metrics", "--run", str(run_dir)]) == 0

    golden = GOLDENS / "demo"
    pairs = (
        (run_dir / "ledger.jsonl", golden / "ledger.jsonl"),
        (run_dir / "summary.txt", golden / "summary.txt"),
        (run_dir / "metrics" / "pass_at_k.csv", golden / "pass_at_k.csv"),
        (run_dir / "metrics" / "transition_matrix.csv", golden / "transition_matrix.csv"),
        (run_dir / "metrics" / "path_stats.csv", golden / "path_stats.csv"),
    )
    for produced, expected in pairs:
        assert produced.read_bytes() == expected.read_bytes(), produced.name
    assert time.monotonic() - start < 10.0


def test_demo_bundle_reproduces_golden_bundle(tmp_path):
    run_dir = tmp_path / "run"
    config = FIXTURES / "demo" / "config.json"
    assert cli_main(["run", "--config", str(config), "--out", str(run_dir)]) == 0
    bundle = tmp_path / "bundle"
    assert cli_main(["report", "--run", str(run_dir), "--out", str(bundle)]) == 0

    golden = GOLDENS / "demo_bundle"
    produced_names = sorted(p.name for p in bundle.iterdir())
    assert produced_names == sorted(p.name for p in golden.iterdir())
    for name in produced_names:
        assert (bundle / name).read_bytes() == (golden / name).read_bytes(), name


# ---------------------------------------------------------------------------
# Real-toolchain smoke: observable failure classes in installed languages

SMOKE_LANGUAGES = ("Python", "C")

SMOKE_CASES = {
    "Python": (
        ("def broken(:\n", Outcome.COMPILATION_ERROR),
        ("print(41)\n", Outcome.WRONG_ANSWER),
        ("while True:\n    pass\n", Outcome.TIME_LIMIT_EXCEEDED),
    ),
    "C": (
        ("int main( {\n", Outcome.COMPILATION_ERROR),
        ('#include <stdio.h>\nint main(void){printf("41\\n");return 0;}\n', Outcome.WRONG_ANSWER),
        ("int main(void){for(;;){}return 0;}\n", Outcome.TIME_LIMIT_EXCEEDED),
    ),
}


@pytest.mark.skipif(
    not set(SMOKE_LANGUAGES).issubset(available_real_languages()),
    reason="Python and C toolchains are not both installed",
)
def test_real_toolchain_classifies_observable_failures():
    toolchain = SubprocessToolchain()
    tests = (TestCase(input=b"", expected_output=b"42\n", time_limit_ms=400),)
    for language in SMOKE_LANGUAGES:
        for i, (code, expected) in enumerate(SMOKE_CASES[language]):
            sample = CodeSample(
                sample_id=f"smoke:{language}:{i}",
                bug_id="smoke",
                iteration=0,
                language=language,
                code=code,
                provenance=Provenance.DIRECT_REPAIR,
            )
            report = toolchain.execute(sample, tests)
            assert report.aggregate is expected, (language, i, report.aggregate)


# ---------------------------------------------------------------------------
# Strategy separation on the planted-signal corpus

SWEEP_SEEDS = range(10)
SWEEP_KINDS = (StrategyKind.REASONING, StrategyKind.RANDOM, StrategyKind.GREEDY)


@pytest.fixture(scope="module")
def planted_corpus():
    return build_corpus(200)


@pytest.fixture(scope="module")
def strategy_sweep(planted_corpus):
    start = time.monotonic()
    runs = {
        seed: {kind: run_strategy(kind, planted_corpus, seed) for kind in SWEEP_KINDS}
        for seed in SWEEP_SEEDS
    }
    return runs, time.monotonic() - start


def test_history_guided_selection_shortens_paths(strategy_sweep):
    runs, elapsed = strategy_sweep
    wins = 0
    for seed in SWEEP_SEEDS:
        paths = {
            kind: mean_path_length(
                runs[seed][kind].state, runs[seed][kind].ledger, include_direct_fixes=False
            )
            for kind in SWEEP_KINDS
        }
        assert all(p is not None for p in paths.values())
        if (
            paths[StrategyKind.REASONING]
            <= paths[StrategyKind.RANDOM]
            <= paths[StrategyKind.GREEDY]
        ):
            wins += 1
    assert wins >= 8, f"path ordering held in only {wins}/10 seeds"
    assert elapsed < 60.0


def test_history_guided_selection_wins_first_translation_round(strategy_sweep):
    runs, _ = strategy_sweep
    wins = 0
    for seed in SWEEP_SEEDS:
        scores = {}
        for kind in (StrategyKind.REASONING, StrategyKind.RANDOM):
            lists = validity_lists(runs[seed][kind].state, PLANTED_LANGUAGES, 1)
            scores[kind] = sum(precision_at_k(rel, 1) for rel in lists.values()) / len(lists)
        if scores[StrategyKind.REASONING] >= scores[StrategyKind.RANDOM]:
            wins += 1
    assert wins >= 8, f"first-round precision held in only {wins}/10 seeds"


def _pass_gain(result) -> float:
    rows = pass_at_k_table(result.state, PLANTED_LANGUAGES, 10, result.iterations_run)
    first = [row.value for row in rows if row.iteration == 0]
    last = [row.value for row in rows if row.iteration == result.iterations_run - 1]
    return sum(last) / len(last) - sum(first) / len(first)


def test_translation_rounds_add_more_than_repeated_direct_repair(planted_corpus, strategy_sweep):
    runs, _ = strategy_sweep
    wins = 0
    for seed in SWEEP_SEEDS:
        with_translation = _pass_gain(runs[seed][StrategyKind.REASONING])
        without = _pass_gain(
            run_strategy(
                StrategyKind.REASONING, planted_corpus, seed, translation_enabled=False
            )
        )
        if without <= with_translation:
            wins += 1
    assert wins >= 8, f"translation gain held in only {wins}/10 seeds"

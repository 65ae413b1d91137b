from __future__ import annotations

import collections

import pytest

from polyrepair.core import BugInstance, LanguageSet, Outcome, ProblemSpec, TestCase
from polyrepair.gateway import HistoryFollowingBackend, ModelGateway, ScriptedBackend
from polyrepair.history import (
    CharacteristicsEncoder,
    HistoryEntry,
    HistorySource,
    RetrievalResult,
)
from polyrepair.strategy import (
    Strategy,
    StrategyKind,
    fallback_choice,
    select_greedy,
    select_random,
    select_reasoning,
    validate_table,
)

LANGS = LanguageSet(("C", "C#", "C++", "Go", "Java", "Kotlin", "PHP", "Python", "Rust"))


def make_bug(bug_id: str = "b1", language: str = "Kotlin") -> BugInstance:
    problem = ProblemSpec(
        problem_id="p1",
        description="Sum two integers.",
        input_spec="two ints",
        output_spec="one int",
        difficulty=1400,
        tests=(TestCase(input=b"1 2\n", expected_output=b"3\n"),),
    )
    return BugInstance(
        bug_id=bug_id,
        source_language=language,
        code="print(input())",
        problem=problem,
        initial_outcome=Outcome.RUNTIME_ERROR,
        error_type="IndexError: list index out of range",
    )


def translation_entry(
    bug_id: str, source_language: str, targets: tuple[str, ...]
) -> HistoryEntry:
    encoder = CharacteristicsEncoder(LANGS)
    return HistoryEntry(
        bug_id=bug_id,
        source=HistorySource.TRANSLATION_BASED,
        source_language=source_language,
        difficulty=1400,
        initial_outcome=Outcome.RUNTIME_ERROR,
        error_type="IndexError",
        fixed=bool(targets),
        successful_target_languages=targets,
        n=20,
        c=5 if targets else 0,
        vector=encoder.encode(source_language, 1400, Outcome.RUNTIME_ERROR, "IndexError"),
        iteration_written=1,
    )


class TestValidateTable:
    def test_accepts_unit_interval(self):
        validate_table({"C": 0.0, "PHP": 1.0, "Go": 0.5})

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="PHP"):
            validate_table({"PHP": 1.2})


class TestGreedy:
    def test_picks_highest_table_value(self):
        table = {"PHP": 0.90, "C": 0.80}
        assert select_greedy(["C", "PHP"], table, LANGS) == "PHP"

    def test_excludes_attempted_by_candidate_list(self):
        # After PHP has been attempted it is no longer a candidate.
        table = {"PHP": 0.90, "C": 0.80}
        assert select_greedy(["C"], table, LANGS) == "C"

    def test_tie_breaks_by_set_order(self):
        table = {"Go": 0.7, "C#": 0.7, "Rust": 0.7}
        assert select_greedy(["Rust", "Go", "C#"], table, LANGS) == "C#"

    def test_missing_entry_counts_as_zero(self):
        table = {"Go": 0.1}
        assert select_greedy(["Java", "Go"], table, LANGS) == "Go"
        assert select_greedy(["Java", "Rust"], table, LANGS) == "Java"

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            select_greedy([], {"C": 0.5}, LANGS)


class TestRandom:
    def test_singleton(self):
        assert select_random(["Go"], run_seed=1, bug_id="b1", iteration=1) == "Go"

    def test_deterministic_per_seed_and_bug(self):
        picks_a = [
            select_random(["C", "Go", "PHP"], 7, f"bug{i}", 1) for i in range(50)
        ]
        picks_b = [
            select_random(["C", "Go", "PHP"], 7, f"bug{i}", 1) for i in range(50)
        ]
        assert picks_a == picks_b
        picks_c = [
            select_random(["C", "Go", "PHP"], 8, f"bug{i}", 1) for i in range(50)
        ]
        assert picks_a != picks_c

    def test_schedule_independent(self):
        # Interleaving draws for other bugs cannot perturb a bug's stream.
        lone = select_random(["C", "Go"], 3, "target-bug", 2)
        select_random(["C", "Go"], 3, "other-a", 1)
        select_random(["C", "Go"], 3, "other-b", 5)
        assert select_random(["C", "Go"], 3, "target-bug", 2) == lone

    def test_iterations_consume_one_stream(self):
        # Iteration i is the i-th draw of the bug's stream, so two iterations
        # can produce different picks while staying replayable.
        picks = {
            it: select_random(["C", "C#", "C++", "Go"], 11, "b9", it)
            for it in (1, 2, 3)
        }
        again = {
            it: select_random(["C", "C#", "C++", "Go"], 11, "b9", it)
            for it in (1, 2, 3)
        }
        assert picks == again

    def test_uniform_within_two_percent(self):
        candidates = ["C", "Go", "PHP", "Rust"]
        counts = collections.Counter(
            select_random(candidates, 42, f"bug-{i}", 1) for i in range(100_000)
        )
        for language in candidates:
            assert abs(counts[language] / 100_000 - 0.25) < 0.02

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            select_random([], 1, "b1", 1)


class TestFallbackChoice:
    def test_history_counts_dominate(self):
        history = RetrievalResult(
            "q",
            (),
            (
                (translation_entry("h1", "Kotlin", ("Go",)), 0.9),
                (translation_entry("h2", "Kotlin", ("Go", "C")), 0.8),
                (translation_entry("h3", "Kotlin", ("C",)), 0.7),
            ),
        )
        table = {"C": 0.99, "Go": 0.01}
        # Go and C both appear twice; the greedy table breaks the tie.
        assert fallback_choice(["C", "Go"], history, table, LANGS) == "C"
        # Drop one C success and Go wins on count despite the table.
        history2 = RetrievalResult(
            "q",
            (),
            (
                (translation_entry("h1", "Kotlin", ("Go",)), 0.9),
                (translation_entry("h2", "Kotlin", ("Go",)), 0.8),
                (translation_entry("h3", "Kotlin", ("C",)), 0.7),
            ),
        )
        assert fallback_choice(["C", "Go"], history2, table, LANGS) == "Go"

    def test_counts_restricted_to_candidates(self):
        history = RetrievalResult(
            "q",
            (),
            ((translation_entry("h1", "Kotlin", ("PHP", "PHP")), 0.9),),
        )
        assert fallback_choice(["C", "Go"], history, {"Go": 0.6}, LANGS) == "Go"

    def test_without_history_uses_table(self):
        assert fallback_choice(["C", "Go"], None, {"Go": 0.6}, LANGS) == "Go"

    def test_without_anything_uses_set_order(self):
        assert fallback_choice(["Rust", "Java", "Go"], None, {}, LANGS) == "Go"


class TestReasoning:
    def test_scripted_decision_is_honoured(self):
        bug = make_bug()
        backend = ScriptedBackend(
            {("b1", "DECIDE_TARGET", "Kotlin"): ["Looks compiled.\nTARGET: C#"]}
        )
        gateway = ModelGateway(backend)
        chosen, rationale = select_reasoning(
            bug, ["C", "C#", "Go"], None, gateway, {}, LANGS, iteration=1
        )
        assert chosen == "C#"
        assert "TARGET: C#" in rationale

    def test_invalid_reply_falls_back(self):
        bug = make_bug()
        backend = ScriptedBackend(
            {("b1", "DECIDE_TARGET", "Kotlin"): ["TARGET: Haskell"]}
        )
        gateway = ModelGateway(backend)
        history = RetrievalResult(
            "b1", (), ((translation_entry("h1", "Kotlin", ("Go",)), 0.9),)
        )
        chosen, rationale = select_reasoning(
            bug, ["C", "Go"], history, gateway, {"C": 0.99}, LANGS, iteration=1
        )
        assert chosen == "Go"
        assert rationale == "fallback"

    def test_history_following_backend_reads_rendered_blocks(self):
        # Three similar bugs fixed via C++ must steer the decision to C++.
        bug = make_bug()
        backend = HistoryFollowingBackend(ScriptedBackend({}))
        gateway = ModelGateway(backend)
        history = RetrievalResult(
            "b1",
            (),
            (
                (translation_entry("h1", "Rust", ("C++",)), 0.99),
                (translation_entry("h2", "Rust", ("C++",)), 0.98),
                (translation_entry("h3", "Rust", ("C++", "Go")), 0.97),
            ),
        )
        chosen, _ = select_reasoning(
            bug, ["C", "C++", "Go"], history, gateway, {"C": 1.0}, LANGS, iteration=1
        )
        assert chosen == "C++"

    def test_no_history_mode_renders_empty_blocks(self):
        bug = make_bug()
        seen: list[str] = []

        class Capture:
            def complete(self, prompt, request, sample_index):
                seen.append(prompt)
                return "TARGET: Go"

        gateway = ModelGateway(Capture())
        history = RetrievalResult(
            "b1", (), ((translation_entry("h1", "Kotlin", ("C",)), 0.9),)
        )
        chosen, _ = select_reasoning(
            bug,
            ["C", "Go"],
            history,
            gateway,
            {},
            LANGS,
            iteration=1,
            include_history=False,
        )
        assert chosen == "Go"
        assert seen[0].count("(no records)") == 2


class TestStrategyDispatch:
    def test_all_kinds_return_a_candidate(self):
        bug = make_bug()
        candidates = ["C", "C++", "Go"]
        backend = ScriptedBackend({("*", "DECIDE_TARGET", "Kotlin"): ["TARGET: C++"]})
        for kind in StrategyKind:
            strategy = Strategy(kind, LANGS, run_seed=5, gateway=ModelGateway(backend))
            strategy.set_table({"C": 0.4, "C++": 0.6, "Go": 0.2})
            chosen, _ = strategy.select(bug, candidates, None, iteration=1)
            assert chosen in candidates

    def test_reasoning_without_gateway_rejected(self):
        strategy = Strategy(StrategyKind.REASONING, LANGS, run_seed=5)
        with pytest.raises(ValueError, match="gateway"):
            strategy.select(make_bug(), ["C"], None, iteration=1)

    def test_greedy_uses_configured_table(self):
        strategy = Strategy(StrategyKind.GREEDY, LANGS, run_seed=0)
        strategy.set_table({"PHP": 0.9, "C": 0.8})
        chosen, rationale = strategy.select(make_bug(), ["C", "PHP"], None, 1)
        assert chosen == "PHP"
        assert rationale == ""

    def test_set_table_validates(self):
        strategy = Strategy(StrategyKind.GREEDY, LANGS, run_seed=0)
        with pytest.raises(ValueError):
            strategy.set_table({"C": -0.1})

"""Execution harness: aggregation rules, mock toolchain, real subprocess runs."""

from __future__ import annotations

import shutil

import pytest

from polyrepair.core import CodeSample, Outcome, Provenance, TestCase
from polyrepair.harness import (
    MockToolchain,
    SubprocessToolchain,
    TestOutcome,
    ToolchainConfigError,
    classify_aggregate,
    execute_batch,
    is_correct,
    normalize_output,
)

PASSED = Outcome.PASSED
WA = Outcome.WRONG_ANSWER
RE = Outcome.RUNTIME_ERROR
CE = Outcome.COMPILATION_ERROR
TLE = Outcome.TIME_LIMIT_EXCEEDED


def make_sample(code: str, sample_id: str = "s1", language: str = "C") -> CodeSample:
    return CodeSample(sample_id, "b1", 0, language, code, Provenance.DIRECT_REPAIR)


def make_outcome(index: int, category: Outcome) -> TestOutcome:
    return TestOutcome(index, category, 1.0, 1.0, "0" * 16, "0" * 16)


TESTS = (
    TestCase(b"1 2\n", b"3\n"),
    TestCase(b"5 5\n", b"10\n"),
    TestCase(b"0 0\n", b"0\n"),
)


class TestAggregation:
    def test_all_passed(self):
        assert classify_aggregate([make_outcome(0, PASSED), make_outcome(1, PASSED)]) is PASSED

    def test_first_failure_decides(self):
        per_test = [make_outcome(0, PASSED), make_outcome(1, WA), make_outcome(2, RE)]
        assert classify_aggregate(per_test) is WA
        # brute-force cross-check: first index whose category is not PASSED
        failing = [o.category for o in per_test if o.category is not PASSED]
        assert classify_aggregate(per_test) is failing[0]

    def test_single_failure(self):
        assert classify_aggregate([make_outcome(0, RE)]) is RE

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            classify_aggregate([])


class TestNormalization:
    def test_trailing_whitespace_per_line(self):
        assert normalize_output(b"a  \nb\t\n") == b"a\nb"

    def test_trailing_newlines(self):
        assert normalize_output(b"a\n\n\n") == b"a"
        assert normalize_output(b"a") == b"a"

    def test_interior_whitespace_preserved(self):
        assert normalize_output(b"a b\nc  d") == b"a b\nc  d"

    def test_empty(self):
        assert normalize_output(b"") == b""
        assert normalize_output(b"\n\n") == b""


class TestMockToolchain:
    def test_directive_verdict(self):
        report = MockToolchain().execute(make_sample("int x;\n// @@verdict: PASSED\n"), TESTS)
        assert report.aggregate is PASSED and report.compiled
        assert len(report.per_test) == 3
        assert is_correct(report)

    def test_last_directive_wins(self):
        code = "// @@verdict: WRONG_ANSWER\nint x;\n// @@verdict: PASSED\n"
        assert MockToolchain().execute(make_sample(code), TESTS).aggregate is PASSED

    def test_per_test_categories_pad_with_last(self):
        code = "// @@verdict: PASSED,WRONG_ANSWER\n"
        report = MockToolchain().execute(make_sample(code), TESTS)
        assert [o.category for o in report.per_test] == [PASSED, WA, WA]
        assert report.aggregate is WA

    def test_verdict_table_by_code_text(self):
        toolchain = MockToolchain({"broken code": ["RUNTIME_ERROR"]})
        report = toolchain.execute(make_sample("broken code"), TESTS)
        assert report.aggregate is RE

    def test_empty_code_fails_compilation(self):
        report = MockToolchain().execute(make_sample(""), TESTS)
        assert report.aggregate is CE
        assert not report.compiled and report.per_test == ()
        assert not is_correct(report)

    def test_unknown_code_fails_compilation(self):
        assert MockToolchain().execute(make_sample("???"), TESTS).aggregate is CE

    def test_unknown_category_name_fails_compilation(self):
        report = MockToolchain().execute(make_sample("// @@verdict: EXPLODED\n"), TESTS)
        assert report.aggregate is CE

    def test_compilation_error_directive(self):
        report = MockToolchain().execute(make_sample("// @@verdict: COMPILATION_ERROR\n"), TESTS)
        assert report.aggregate is CE and not report.compiled

    def test_passed_tests_carry_expected_output_digest(self):
        report = MockToolchain().execute(make_sample("// @@verdict: PASSED\n"), TESTS)
        reports = {o.index: o.stdout_digest for o in report.per_test}
        assert len(set(reports.values())) == 3  # distinct expected outputs

    def test_deterministic(self):
        sample = make_sample("// @@verdict: PASSED,WRONG_ANSWER\n")
        assert MockToolchain().execute(sample, TESTS) == MockToolchain().execute(sample, TESTS)

    def test_outcome_totals_conserved(self):
        samples = [
            make_sample("// @@verdict: PASSED\n", "s1"),
            make_sample("// @@verdict: WRONG_ANSWER\n", "s2"),
            make_sample("", "s3"),
        ]
        reports = [MockToolchain().execute(s, TESTS) for s in samples]
        by_category = {}
        for report in reports:
            by_category[report.aggregate] = by_category.get(report.aggregate, 0) + 1
        assert sum(by_category.values()) == len(samples)


class TestBatch:
    def test_order_preserved_under_parallelism(self):
        jobs = [
            (make_sample(f"// @@verdict: {'PASSED' if i % 2 else 'WRONG_ANSWER'}\n", f"s{i}"), TESTS)
            for i in range(12)
        ]
        sequential = execute_batch(MockToolchain(), jobs, parallelism=1)
        parallel = execute_batch(MockToolchain(), jobs, parallelism=8)
        assert sequential == parallel
        assert [r.sample_id for r in parallel] == [f"s{i}" for i in range(12)]


HAVE_PYTHON = shutil.which("python3") is not None
HAVE_GCC = shutil.which("gcc") is not None


@pytest.mark.skipif(not HAVE_PYTHON, reason="python3 not installed")
class TestSubprocessPython:
    def test_correct_echo_program(self):
        code = "a, b = map(int, input().split())\nprint(a + b)\n"
        report = SubprocessToolchain().execute(make_sample(code, language="Python"), TESTS)
        assert report.aggregate is PASSED
        assert [o.category for o in report.per_test] == [PASSED] * 3

    def test_syntax_error(self):
        report = SubprocessToolchain().execute(
            make_sample("def broken(:\n", language="Python"), TESTS
        )
        assert report.aggregate is CE and not report.compiled

    def test_wrong_answer(self):
        code = "input()\nprint(42)\n"
        report = SubprocessToolchain().execute(make_sample(code, language="Python"), TESTS)
        assert report.aggregate is WA

    def test_runtime_error(self):
        code = "raise SystemExit(3)\n"
        report = SubprocessToolchain().execute(make_sample(code, language="Python"), TESTS)
        assert report.aggregate is RE

    def test_infinite_loop_times_out(self):
        code = "while True:\n    pass\n"
        tests = (TestCase(b"", b"never", time_limit_ms=500),)
        report = SubprocessToolchain().execute(make_sample(code, language="Python"), tests)
        assert report.aggregate is TLE
        assert report.per_test[0].wall_time_ms >= 500

    def test_missing_toolchain_entry(self):
        with pytest.raises(ToolchainConfigError):
            SubprocessToolchain({}).execute(make_sample("x", language="Python"), TESTS)


@pytest.mark.skipif(not HAVE_GCC, reason="gcc not installed")
class TestSubprocessC:
    def test_correct_program(self):
        code = '#include <stdio.h>\nint main(){int a,b;scanf("%d %d",&a,&b);printf("%d\\n",a+b);return 0;}\n'
        report = SubprocessToolchain().execute(make_sample(code, language="C"), TESTS)
        assert report.aggregate is PASSED

    def test_compile_error(self):
        report = SubprocessToolchain().execute(make_sample("int main({", language="C"), TESTS)
        assert report.aggregate is CE and not report.compiled

"""Execution harness: run one code sample against a test suite and classify
the result into the six outcome categories.

Two toolchains implement the same contract: a mock that reads verdicts from
the code text (keeps the whole pipeline runnable with no compilers), and a
subprocess toolchain that compiles and runs real programs under time and
memory limits.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from polyrepair.core import CodeSample, Outcome, TestCase

VERDICT_DIRECTIVE = "@@verdict:"


class ToolchainConfigError(Exception):
    """A language has no usable toolchain entry."""


class InfrastructureError(Exception):
    """The sandbox itself failed; distinct from the judged program failing."""


@dataclass(frozen=True, slots=True)
class TestOutcome:
    __test__ = False  # domain type, not a pytest class

    index: int
    category: Outcome
    wall_time_ms: float
    peak_memory_mib: float
    stdout_digest: str
    stderr_digest: str


@dataclass(frozen=True, slots=True)
class ExecutionReport:
    sample_id: str
    per_test: tuple[TestOutcome, ...]
    aggregate: Outcome
    compiled: bool


def normalize_output(raw: bytes) -> bytes:
    """Judge-style comparison form: trailing whitespace stripped per line,
    trailing newlines dropped."""
    text = raw.decode("utf-8", errors="replace")
    lines = [line.rstrip() for line in text.split("\n")]
    return "\n".join(lines).rstrip("\n").encode("utf-8")


def _digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()[:16]


def classify_aggregate(per_test: Sequence[TestOutcome]) -> Outcome:
    """PASSED only if every test passed; otherwise the first failure decides."""
    if not per_test:
        raise ValueError("cannot classify an empty test list")
    for outcome in per_test:
        if outcome.category is not Outcome.PASSED:
            return outcome.category
    return Outcome.PASSED


def is_correct(report: ExecutionReport) -> bool:
    """The single definition of a correct sample used everywhere."""
    return report.aggregate is Outcome.PASSED


class Toolchain(Protocol):
    def execute(self, sample: CodeSample, tests: Sequence[TestCase]) -> ExecutionReport: ...


def execute_batch(
    toolchain: Toolchain,
    jobs: Sequence[tuple[CodeSample, Sequence[TestCase]]],
    parallelism: int = 1,
) -> list[ExecutionReport]:
    """Run independent executions with bounded parallelism, preserving job order."""
    if parallelism <= 1 or len(jobs) <= 1:
        return [toolchain.execute(sample, tests) for sample, tests in jobs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(toolchain.execute, sample, tests) for sample, tests in jobs]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Mock toolchain


class MockToolchain:
    """Judges samples from scripted verdicts instead of running them.

    Verdict resolution order: the last `@@verdict:` directive line embedded
    in the code, then the verdict table keyed by exact code text. Empty code
    or code with neither source of verdicts fails to compile.

    A directive lists one or more categories: `@@verdict: WRONG_ANSWER` or
    `@@verdict: PASSED,WRONG_ANSWER`. Categories map onto tests by index,
    the last category repeating if the suite is longer.
    """

    def __init__(self, verdicts: dict[str, list[str]] | None = None):
        self.verdicts = dict(verdicts or {})

    def _verdict_categories(self, code: str) -> list[Outcome] | None:
        directive: str | None = None
        for line in code.splitlines():
            stripped = line.strip()
            marker = stripped.find(VERDICT_DIRECTIVE)
            if marker != -1:
                directive = stripped[marker + len(VERDICT_DIRECTIVE) :].strip()
        if directive is None and code in self.verdicts:
            directive = ",".join(self.verdicts[code])
        if directive is None:
            return None
        try:
            return [Outcome(part.strip()) for part in directive.split(",") if part.strip()]
        except ValueError:
            return None  # unknown category names judge as unparseable code

    def execute(self, sample: CodeSample, tests: Sequence[TestCase]) -> ExecutionReport:
        if not tests:
            raise ValueError("tests must be non-empty")
        categories = self._verdict_categories(sample.code) if sample.code.strip() else None
        if not categories or categories[0] is Outcome.COMPILATION_ERROR:
            return ExecutionReport(
                sample_id=sample.sample_id,
                per_test=(),
                aggregate=Outcome.COMPILATION_ERROR,
                compiled=False,
            )
        per_test = []
        for i, test in enumerate(tests):
            category = categories[i] if i < len(categories) else categories[-1]
            stdout = test.expected_output if category is Outcome.PASSED else b""
            per_test.append(
                TestOutcome(
                    index=i,
                    category=category,
                    wall_time_ms=1.0,
                    peak_memory_mib=1.0,
                    stdout_digest=_digest(normalize_output(stdout)),
                    stderr_digest=_digest(b""),
                )
            )
        return ExecutionReport(
            sample_id=sample.sample_id,
            per_test=tuple(per_test),
            aggregate=classify_aggregate(per_test),
            compiled=True,
        )


# ---------------------------------------------------------------------------
# Subprocess toolchain

DEFAULT_TOOLCHAINS: dict[str, dict[str, object]] = {
    "Python": {
        "ext": ".py",
        "compile": ["python3", "-m", "py_compile", "{src}"],
        "run": ["python3", "{src}"],
    },
    "C": {
        "ext": ".c",
        "compile": ["gcc", "-O2", "{src}", "-o", "{bin}", "-lm"],
        "run": ["{bin}"],
    },
    "C++": {
        "ext": ".cpp",
        "compile": ["g++", "-O2", "{src}", "-o", "{bin}"],
        "run": ["{bin}"],
    },
}


class SubprocessToolchain:
    """Compiles and runs samples with per-test wall-clock and memory limits.

    Memory is observed by polling resident set size; the poll interval bounds
    detection granularity, which is fine for limits in the tens of MiB.
    """

    def __init__(self, configs: dict[str, dict[str, object]] | None = None):
        self.configs = configs if configs is not None else DEFAULT_TOOLCHAINS

    @classmethod
    def from_config_file(cls, path: str | Path) -> SubprocessToolchain:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["languages"])

    def _config(self, language: str) -> dict[str, object]:
        try:
            return self.configs[language]
        except KeyError:
            raise ToolchainConfigError(f"no toolchain configured for {language!r}") from None

    def execute(self, sample: CodeSample, tests: Sequence[TestCase]) -> ExecutionReport:
        if not tests:
            raise ValueError("tests must be non-empty")
        config = self._config(sample.language)
        with tempfile.TemporaryDirectory(prefix="polyrepair-exec-") as workdir:
            src = Path(workdir) / f"main{config['ext']}"
            src.write_text(sample.code, encoding="utf-8")
            binary = Path(workdir) / "main.bin"
            subst = {"src": str(src), "bin": str(binary), "dir": workdir}
            compile_cmd = [str(part).format(**subst) for part in config.get("compile", [])]
            if compile_cmd:
                try:
                    compiled = subprocess.run(
                        compile_cmd, capture_output=True, timeout=60, cwd=workdir
                    )
                except FileNotFoundError as exc:
                    raise ToolchainConfigError(
                        f"compiler for {sample.language!r} not found: {exc}"
                    ) from exc
                except subprocess.TimeoutExpired:
                    return ExecutionReport(sample.sample_id, (), Outcome.COMPILATION_ERROR, False)
                if compiled.returncode != 0:
                    return ExecutionReport(sample.sample_id, (), Outcome.COMPILATION_ERROR, False)
            run_cmd = [str(part).format(**subst) for part in config["run"]]
            per_test = [
                self._run_test(run_cmd, workdir, i, test) for i, test in enumerate(tests)
            ]
        return ExecutionReport(
            sample_id=sample.sample_id,
            per_test=tuple(per_test),
            aggregate=classify_aggregate(per_test),
            compiled=True,
        )

    def _run_test(self, run_cmd: list[str], workdir: str, index: int, test: TestCase) -> TestOutcome:
        import psutil

        in_path = Path(workdir) / f"in_{index}"
        out_path = Path(workdir) / f"out_{index}"
        err_path = Path(workdir) / f"err_{index}"
        in_path.write_bytes(test.input)
        limit_bytes = test.memory_limit_mib * 1024 * 1024
        start = time.monotonic()
        peak_rss = 0
        category: Outcome | None = None
        # file-backed stdio avoids pipe-buffer deadlocks with hung programs
        with in_path.open("rb") as in_fh, out_path.open("wb") as out_fh, err_path.open(
            "wb"
        ) as err_fh:
            try:
                proc = subprocess.Popen(
                    run_cmd,
                    stdin=in_fh,
                    stdout=out_fh,
                    stderr=err_fh,
                    cwd=workdir,
                )
            except OSError as exc:
                raise InfrastructureError(f"failed to spawn {run_cmd[0]!r}: {exc}") from exc
            watcher = psutil.Process(proc.pid)
            while True:
                try:
                    peak_rss = max(peak_rss, watcher.memory_info().rss)
                except psutil.NoSuchProcess:
                    pass
                done = proc.poll() is not None
                elapsed_ms = (time.monotonic() - start) * 1000
                if done:
                    break
                if elapsed_ms > test.time_limit_ms:
                    proc.kill()
                    proc.wait()
                    category = Outcome.TIME_LIMIT_EXCEEDED
                    break
                if peak_rss > limit_bytes:
                    proc.kill()
                    proc.wait()
                    category = Outcome.MEMORY_LIMIT_EXCEEDED
                    break
                time.sleep(0.002)
        elapsed_ms = (time.monotonic() - start) * 1000
        stdout = out_path.read_bytes()
        stderr = err_path.read_bytes()
        if category is None:
            if proc.returncode != 0:
                category = Outcome.RUNTIME_ERROR
            elif normalize_output(stdout) == normalize_output(test.expected_output):
                category = Outcome.PASSED
            else:
                category = Outcome.WRONG_ANSWER
        return TestOutcome(
            index=index,
            category=category,
            wall_time_ms=elapsed_ms,
            peak_memory_mib=peak_rss / (1024 * 1024),
            stdout_digest=_digest(normalize_output(stdout)),
            stderr_digest=_digest(stderr),
        )


def available_real_languages(configs: dict[str, dict[str, object]] | None = None) -> list[str]:
    """Languages whose configured tools are actually installed."""
    configs = configs if configs is not None else DEFAULT_TOOLCHAINS
    available = []
    for language, config in configs.items():
        commands = [config["run"][0]]  # type: ignore[index]
        if config.get("compile"):
            commands.append(config["compile"][0])  # type: ignore[index]
        if all(shutil.which(str(cmd)) for cmd in commands if not str(cmd).startswith("{")):
            available.append(language)
    return available

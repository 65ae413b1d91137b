"""Model gateway: prompt construction, backend invocation, response parsing.

The engine speaks to one backend interface for repair, translation, and
target-decision tasks. Scripted and stochastic mock backends make every
pipeline path runnable and reproducible offline; the HTTP backend talks to a
chat-completion endpoint.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import random
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Protocol

from polyrepair.core import Outcome


class GatewayError(Exception):
    """Base for gateway failures."""


class TransportError(GatewayError):
    """Backend unreachable; retried with backoff."""


class ContentError(GatewayError):
    """Backend answered, but the content is unusable; never retried."""


class Task(str, enum.Enum):
    REPAIR = "REPAIR"
    TRANSLATE = "TRANSLATE"
    BACK_TRANSLATE = "BACK_TRANSLATE"
    DECIDE_TARGET = "DECIDE_TARGET"

    def __str__(self) -> str:
        return self.value


CODE_TASKS = (Task.REPAIR, Task.TRANSLATE, Task.BACK_TRANSLATE)

NO_RECORDS = "(no records)"
TARGET_LINE = "TARGET:"


@dataclass(frozen=True)
class TaskRequest:
    task: Task
    bug_id: str
    iteration: int = 0
    language: str | None = None
    source_language: str | None = None
    target_language: str | None = None
    description: str | None = None
    input_spec: str | None = None
    output_spec: str | None = None
    error_type: str | None = None
    difficulty: int | None = None
    initial_outcome: Outcome | None = None
    code: str | None = None
    candidates: tuple[str, ...] = ()
    history_initial: str | None = None
    history_translation: str | None = None
    sample_count: int = 1
    decode: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")


@dataclass(frozen=True)
class DecisionResponse:
    chosen_language: str
    rationale: str


def _require(request: TaskRequest, *fields: str) -> None:
    for name in fields:
        value = getattr(request, name)
        if value is None or (name == "candidates" and not value):
            raise ValueError(f"{request.task} request missing field {name!r}")


def build_prompt(request: TaskRequest) -> str:
    """Render the task prompt; pure function of the request."""
    if request.task is Task.REPAIR:
        _require(request, "description", "error_type", "input_spec", "output_spec",
                 "code", "language")
        return (
            "# Program repair\n"
            "## Problem\n"
            f"{request.description}\n"
            "## Error type\n"
            f"{request.error_type}\n"
            "## Input specification\n"
            f"{request.input_spec}\n"
            "## Output specification\n"
            f"{request.output_spec}\n"
            f"## Buggy code ({request.language})\n"
            f"```\n{request.code}\n```\n"
            "## Instruction\n"
            f"Repair the buggy {request.language} program so it passes all tests. "
            "Reply with only the fixed program in a fenced code block.\n"
        )
    if request.task in (Task.TRANSLATE, Task.BACK_TRANSLATE):
        _require(request, "source_language", "target_language", "code")
        source, target = request.source_language, request.target_language
        if request.task is Task.BACK_TRANSLATE:
            source, target = target, source
        return (
            "# Code translation\n"
            f"Source language: {source}\n"
            f"Target language: {target}\n"
            f"## Code ({source})\n"
            f"```\n{request.code}\n```\n"
            "## Instruction\n"
            f"Translate the {source} program above into {target}, preserving its "
            "behavior exactly. Reply with only the translated program in a fenced "
            "code block.\n"
        )
    if request.task is Task.DECIDE_TARGET:
        _require(request, "source_language", "error_type", "difficulty", "candidates")
        initial = request.history_initial or NO_RECORDS
        translation = request.history_translation or NO_RECORDS
        outcome = request.initial_outcome.value if request.initial_outcome else "UNKNOWN"
        return (
            "# Target language decision\n"
            "You select the next target language for translation-based program repair.\n"
            "## Bug characteristics\n"
            f"language: {request.source_language}\n"
            f"difficulty: {request.difficulty}\n"
            f"initial outcome: {outcome}\n"
            f"error type: {request.error_type}\n"
            "## Historical feedback: initial direct repair\n"
            f"{initial}\n"
            "## Historical feedback: translation-based repair\n"
            f"{translation}\n"
            "## Task\n"
            "Choose the next target language from the remaining candidates:\n"
            f"{', '.join(request.candidates)}\n"
            "Think step by step about which candidate gives this bug the best chance "
            "of being repaired, considering the feedback above. Then end your reply "
            "with a single line of the form:\n"
            f"{TARGET_LINE} <language>\n"
        )
    raise ValueError(f"unsupported task {request.task!r}")


def extract_code(response: str) -> str:
    """Code from a model reply: the last fenced block if any block exists,
    otherwise the reply verbatim (scripted fixtures carry bare code)."""
    fences = re.findall(r"```[^\n]*\n(.*?)```", response, flags=re.DOTALL)
    if fences:
        return fences[-1].strip("\n")
    return response.strip()


def _candidate_pattern(name: str) -> re.Pattern[str]:
    # guards keep "C" from matching inside "C++", "C#", or identifiers
    return re.compile(rf"(?<![\w+#]){re.escape(name)}(?![\w+#])")


def parse_decision(response: str, candidates: tuple[str, ...]) -> str | None:
    """Chosen candidate, or None when the reply does not commit to one.

    The last `TARGET:` line wins; without one, the last mention of any
    candidate name counts.
    """
    target: str | None = None
    for line in response.splitlines():
        stripped = line.strip()
        if stripped.upper().startswith(TARGET_LINE):
            target = stripped[len(TARGET_LINE) :].strip().strip("`'\".")
    if target is not None:
        for name in candidates:
            if target == name:
                return name
        return None  # committed to a non-candidate
    last: tuple[int, str] | None = None
    for name in candidates:
        for match in _candidate_pattern(name).finditer(response):
            if last is None or match.start() >= last[0]:
                last = (match.start(), name)
    return last[1] if last else None


class Backend(Protocol):
    def complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str: ...


class ModelGateway:
    """Runs requests against a backend with retries and an in-flight cap."""

    def __init__(
        self,
        backend: Backend,
        max_in_flight: int = 8,
        retries: int = 3,
        backoff_s: float = 0.5,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.retries = retries
        self.backoff_s = backoff_s
        self._sleeper = sleeper
        self._slots = threading.Semaphore(max_in_flight)

    def _complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str:
        last_error: TransportError | None = None
        for attempt in range(self.retries):
            with self._slots:
                try:
                    return self.backend.complete(prompt, request, sample_index)
                except TransportError as exc:
                    last_error = exc
                    if attempt + 1 < self.retries:
                        self._sleeper(self.backoff_s * 2**attempt)
        raise last_error  # type: ignore[misc]

    def generate_samples(self, request: TaskRequest) -> list[str]:
        """One code text per requested sample, in sample order."""
        if request.task not in CODE_TASKS:
            raise ValueError(f"{request.task} does not generate code samples")
        prompt = build_prompt(request)
        return [
            extract_code(self._complete(prompt, request, i))
            for i in range(request.sample_count)
        ]

    def decide_target(self, request: TaskRequest, fallback: str) -> DecisionResponse:
        """Validated target choice; the precomputed fallback is used whenever
        the reply cannot be mapped onto a candidate."""
        if request.task is not Task.DECIDE_TARGET:
            raise ValueError(f"decide_target got task {request.task}")
        if not request.candidates:
            raise ValueError("decide_target requires a non-empty candidate list")
        if fallback not in request.candidates:
            raise ValueError(f"fallback {fallback!r} is not a candidate")
        prompt = build_prompt(request)
        try:
            response = self._complete(prompt, request, 0)
        except GatewayError:
            return DecisionResponse(fallback, "fallback")
        chosen = parse_decision(response, request.candidates)
        if chosen is None:
            return DecisionResponse(fallback, "fallback")
        return DecisionResponse(chosen, response.strip())


# ---------------------------------------------------------------------------
# Backends


class ScriptedBackend:
    """Replays fixture responses keyed by (bug_id, task, language).

    The key's language is the language of the expected output: the repair
    language for REPAIR, the translation target for TRANSLATE, the bug's own
    language for BACK_TRANSLATE and DECIDE_TARGET. Each key cycles through
    its response list across calls; a "*" bug_id acts as a wildcard.
    """

    def __init__(self, responses: dict[tuple[str, str, str], list[str]]):
        self.responses = dict(responses)
        self._cursors: dict[tuple[str, str, str], int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        responses = {
            (entry["bug_id"], entry["task"], entry["language"]): list(entry["responses"])
            for entry in data
        }
        return cls(responses)

    @staticmethod
    def key_language(request: TaskRequest) -> str:
        if request.task is Task.REPAIR:
            assert request.language is not None
            return request.language
        if request.task is Task.TRANSLATE:
            assert request.target_language is not None
            return request.target_language
        assert request.source_language is not None
        return request.source_language

    def complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str:
        language = self.key_language(request)
        for key in (
            (request.bug_id, request.task.value, language),
            ("*", request.task.value, language),
        ):
            scripted = self.responses.get(key)
            if scripted:
                with self._lock:
                    cursor = self._cursors.get(key, 0)
                    self._cursors[key] = cursor + 1
                return scripted[cursor % len(scripted)]
        raise ContentError(
            f"no scripted response for bug={request.bug_id} task={request.task} "
            f"language={language}"
        )


@dataclass(frozen=True)
class FixBand:
    low: int
    high: int
    probability: float


class StochasticBackend:
    """Emits mock-toolchain verdict directives with seeded randomness.

    Repair samples pass with the configured per-(language, difficulty band)
    probability; translations keep the bug's current outcome; back
    translations preserve correctness with `preserve_probability`. Every
    draw is derived from (seed, bug, task, language, iteration, sample), so
    results are independent of scheduling order.
    """

    def __init__(
        self,
        fix_probabilities: dict[str, list[FixBand]],
        seed: int,
        default_probability: float = 0.05,
        preserve_probability: float = 1.0,
    ):
        self.fix_probabilities = fix_probabilities
        self.seed = seed
        self.default_probability = default_probability
        self.preserve_probability = preserve_probability

    @classmethod
    def from_file(cls, path: str | Path, seed: int) -> StochasticBackend:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        bands = {
            language: [FixBand(int(lo), int(hi), float(p)) for lo, hi, p in entries]
            for language, entries in data.get("languages", {}).items()
        }
        return cls(
            bands,
            seed,
            default_probability=float(data.get("default", 0.05)),
            preserve_probability=float(data.get("preserve", 1.0)),
        )

    def fix_probability(self, language: str, difficulty: int) -> float:
        for band in self.fix_probabilities.get(language, []):
            if band.low <= difficulty <= band.high:
                return band.probability
        return self.default_probability

    def _draw(self, request: TaskRequest, language: str, sample_index: int) -> float:
        material = (
            f"{self.seed}:{request.bug_id}:{request.task}:{language}:"
            f"{request.iteration}:{sample_index}"
        )
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big")).random()

    def complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str:
        if request.task is Task.REPAIR:
            assert request.language is not None and request.difficulty is not None
            p = self.fix_probability(request.language, request.difficulty)
            fixed = self._draw(request, request.language, sample_index) < p
            verdict = Outcome.PASSED if fixed else Outcome.WRONG_ANSWER
            return f"// @@verdict: {verdict}\n"
        if request.task is Task.TRANSLATE:
            outcome = request.initial_outcome or Outcome.WRONG_ANSWER
            return f"// @@verdict: {outcome}\n"
        if request.task is Task.BACK_TRANSLATE:
            assert request.source_language is not None
            kept = (
                self._draw(request, request.source_language, sample_index)
                < self.preserve_probability
            )
            verdict = Outcome.PASSED if kept else Outcome.WRONG_ANSWER
            return f"// @@verdict: {verdict}\n"
        if request.task is Task.DECIDE_TARGET:
            choice = request.candidates[
                int(self._draw(request, "decision", sample_index) * len(request.candidates))
                % len(request.candidates)
            ]
            return f"{TARGET_LINE} {choice}\n"
        raise ContentError(f"unsupported task {request.task}")


class HistoryFollowingBackend:
    """Decision backend that reads the rendered history blocks in the prompt.

    It tallies `targets=` entries in the translation-based feedback section,
    restricts to the candidates listed in the prompt, and answers with the
    most frequent one. Everything except DECIDE_TARGET is delegated.
    """

    TARGETS = re.compile(r"targets=([^\s]+)")
    CANDIDATES_HEADER = "Choose the next target language from the remaining candidates:"

    def __init__(self, delegate: Backend):
        self.delegate = delegate

    def complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str:
        if request.task is not Task.DECIDE_TARGET:
            return self.delegate.complete(prompt, request, sample_index)
        candidates: list[str] = []
        lines = prompt.splitlines()
        for i, line in enumerate(lines):
            if line.strip() == self.CANDIDATES_HEADER and i + 1 < len(lines):
                candidates = [c.strip() for c in lines[i + 1].split(",") if c.strip()]
        section = prompt.split("translation-based repair", 1)[-1]
        section = section.split("## Task", 1)[0]
        tally: dict[str, int] = {}
        for match in self.TARGETS.finditer(section):
            for name in match.group(1).split(","):
                if name in candidates:
                    tally[name] = tally.get(name, 0) + 1
        if tally:
            best = max(tally.values())
            for name in candidates:  # candidate order breaks ties
                if tally.get(name) == best:
                    return f"{TARGET_LINE} {name}\n"
        if candidates:
            return f"{TARGET_LINE} {candidates[0]}\n"
        return ""  # unparseable prompt; gateway falls back


@dataclass(frozen=True)
class HttpConfig:
    endpoint: str
    model: str
    auth_env: str = "POLYREPAIR_API_TOKEN"
    temperature: float = 0.8
    timeout_s: float = 120.0


def _urllib_transport(url: str, body: bytes, headers: dict[str, str], timeout: float) -> str:
    request = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.read().decode("utf-8")
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise TransportError(str(exc)) from exc


class HttpBackend:
    """Chat-completion backend over HTTP; auth token read from an env var."""

    def __init__(self, config: HttpConfig, transport=_urllib_transport):
        self.config = config
        self.transport = transport

    def complete(self, prompt: str, request: TaskRequest, sample_index: int) -> str:
        payload: dict[str, Any] = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        if request.decode:
            payload.update(request.decode)
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        raw = self.transport(
            self.config.endpoint,
            json.dumps(payload).encode("utf-8"),
            headers,
            self.config.timeout_s,
        )
        try:
            data = json.loads(raw)
            content = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ContentError(f"malformed completion response: {exc}") from exc
        if not isinstance(content, str):
            raise ContentError("completion content is not text")
        return content


def render_history_initial(neighbors) -> str:
    """Initial-direct feedback block: which languages direct repair handles."""
    if not neighbors:
        return NO_RECORDS
    lines = []
    for entry, similarity in neighbors:
        lines.append(
            f"- bug={entry.bug_id} language={entry.source_language} "
            f"difficulty={entry.difficulty} outcome={entry.initial_outcome} "
            f"fixed={'yes' if entry.fixed else 'no'} pass={entry.c}/{entry.n} "
            f"similarity={similarity:.4f}"
        )
    return "\n".join(lines)


def render_history_translation(neighbors) -> str:
    """Translation-based feedback block: which targets fixed similar bugs."""
    if not neighbors:
        return NO_RECORDS
    lines = []
    for entry, similarity in neighbors:
        targets = ",".join(entry.successful_target_languages) or "none"
        lines.append(
            f"- bug={entry.bug_id} language={entry.source_language} "
            f"difficulty={entry.difficulty} outcome={entry.initial_outcome} "
            f"fixed={'yes' if entry.fixed else 'no'} targets={targets} "
            f"iteration={entry.iteration_written} similarity={similarity:.4f}"
        )
    return "\n".join(lines)


__all__ = [
    "Backend",
    "ContentError",
    "DecisionResponse",
    "FixBand",
    "GatewayError",
    "HistoryFollowingBackend",
    "HttpBackend",
    "HttpConfig",
    "ModelGateway",
    "ScriptedBackend",
    "StochasticBackend",
    "Task",
    "TaskRequest",
    "TransportError",
    "build_prompt",
    "extract_code",
    "parse_decision",
    "render_history_initial",
    "render_history_translation",
]

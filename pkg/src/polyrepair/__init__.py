"""Cross-language program repair orchestration engine.

Repairs buggy programs by iteratively translating them into languages where
the repair model is stronger, validating candidate fixes against test suites,
and steering target-language selection with feedback from similar historical
repairs.
"""

__version__ = "0.1.0"

from polyrepair.core import (
    BugInstance,
    CampaignState,
    CodeSample,
    LanguageSet,
    Outcome,
    ProblemSpec,
    Provenance,
    TestCase,
)

__all__ = [
    "BugInstance",
    "CampaignState",
    "CodeSample",
    "LanguageSet",
    "Outcome",
    "ProblemSpec",
    "Provenance",
    "TestCase",
    "__version__",
]

"""ToC/MRM simulator: scenario configuration, runs, batches and TOR pdfs."""

from ._tocsim import (
    CalibrationProfile,
    RunResult,
    ScenarioConfig,
    TocsimError,
    batch,
    run,
    success_rate,
    toc_l1,
    toc_pdf,
    variants,
    windows,
)

__all__ = [
    "CalibrationProfile",
    "RunResult",
    "ScenarioConfig",
    "TocsimError",
    "batch",
    "run",
    "success_rate",
    "toc_l1",
    "toc_pdf",
    "variants",
    "windows",
]

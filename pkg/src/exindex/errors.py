"""Exception types shared across the package.

Every data-degenerate condition gets its own class so callers (and the CLI
exit-code mapping) can distinguish "your data has no exceedances" from
"your block scheme is inconsistent" without string matching.
"""

from __future__ import annotations


class ExindexError(Exception):
    """Base class for all package-specific errors."""


class InvalidThresholdError(ExindexError):
    """Threshold level is unusable (e.g. u <= 0 with positive observations)."""


class WindowError(ExindexError):
    """Block length does not fit the series (s < 1 or s > n)."""


class SchemeError(ExindexError):
    """Block scheme violates 1 <= s <= r <= n or a divisibility requirement."""


class NoExceedancesError(ExindexError):
    """No observation exceeds the threshold, so a ratio estimate is undefined."""

    def __init__(self, n: int, u: float) -> None:
        super().__init__(f"no exceedances above u={u!r} in a series of length {n}")
        self.n = n
        self.u = u


class InsufficientBlocksError(ExindexError):
    """Fewer big blocks than the variance estimator needs (m < 2)."""


class InsufficientEventsError(ExindexError):
    """A conditional Monte Carlo estimate collected too few conditioning events."""

    def __init__(self, achieved: int, required: int) -> None:
        super().__init__(
            f"only {achieved} conditioning events occurred, need at least {required}"
        )
        self.achieved = achieved
        self.required = required


class InsufficientSampleError(ExindexError):
    """Too few values for a distributional diagnostic."""


class ConfigError(ExindexError):
    """Experiment or CLI configuration is invalid; message lists all violations."""

    def __init__(self, problems: list[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = list(problems)


class HarnessAbort(ExindexError):
    """Too many replicates failed for the experiment summary to be meaningful."""


class DegenerateVarianceWarning(UserWarning):
    """Plug-in asymptotic variance came out non-positive (degenerate limit)."""

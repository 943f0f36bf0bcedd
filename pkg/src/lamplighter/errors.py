"""Exception types shared across the package.

Distinct classes so the CLI can map each failure mode to its own exit code.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration (bad parameter, malformed config file)."""


class TruncationError(RuntimeError):
    """A walk touched the truncation boundary of a finite graph window.

    Truncated graphs stand in for infinite ones; touching the boundary means
    the window was too small for the requested run and the result would be
    biased.  Always raised (or counted per replica), never ignored.
    """


class StepBudgetError(RuntimeError):
    """A single run exceeded its step budget before finishing.

    Return times are almost surely finite in the recurrent regimes, but a
    finite machine still needs a guard for misconfigured (transient) runs.
    """

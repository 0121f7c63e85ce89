"""Postmeter - Post-selected metrology toolkit."""

from __future__ import annotations


class PostmeterError(Exception):
    """Base class for every Postmeter error."""


class InvalidStateError(PostmeterError, ValueError):
    """A polarization state could not be built."""


class InvalidVisibilityError(PostmeterError, ValueError):
    """Visibilities are out of range or badly ordered."""


class InvalidSetupError(PostmeterError, ValueError):
    """Optical constants are not physical."""


class InvalidModeError(PostmeterError, ValueError):
    """Post-selection mode is malformed or unsupported here."""


class DegeneratePostSelectionError(PostmeterError, ArithmeticError):
    """Post-selection probability fell below the floor."""


class InadequateGridError(PostmeterError, ArithmeticError):
    """Position grid is too coarse or did not converge."""


class ZeroInformationError(PostmeterError, ArithmeticError):
    """A bound was requested for zero Fisher information."""


class FisherDecompositionError(PostmeterError, ArithmeticError):
    """Multinomial information disagrees with its decomposition."""


class EstimationError(PostmeterError, ArithmeticError):
    """Base class for estimator failures."""


class NoInformationError(EstimationError):
    """The data carries no information about the coupling."""


class OutOfRangeError(EstimationError):
    """Observed statistic lies outside the model range."""


class NoPostSelectedPhotonsError(EstimationError):
    """No photon survived post-selection."""


class IllConditionedError(EstimationError):
    """Meter response is too flat to invert reliably."""


class ImpossibleOutcomeError(EstimationError):
    """A zero-probability outcome was observed."""


class NonConvergenceError(EstimationError):
    """The likelihood maximization did not reach a stationary point."""


class TooFewTrialsError(PostmeterError, ValueError):
    """Too few converged estimates to summarize."""


class ConfigError(PostmeterError, ValueError):
    """Configuration could not be loaded or validated."""


class EmitError(PostmeterError, OSError):
    """A result table could not be written or read."""


class EmptyTableError(PostmeterError, ValueError):
    """A result table without rows was handed to the emitter."""

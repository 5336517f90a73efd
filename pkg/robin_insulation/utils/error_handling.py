"""
Error handling utilities for the insulation laboratory.
"""

import logging
import traceback
import functools
import typing as t

logger = logging.getLogger(__name__)


class InsulationError(Exception):
    """Base class for every error raised by the laboratory."""


class MeshError(InsulationError):
    """Invalid domain description or malformed mesh."""


class DegenerateMeshError(MeshError):
    """A triangle with (numerically) zero area was met during assembly."""


class ConvergenceError(InsulationError):
    """An iterative method stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float = float("nan"),
                 history: t.Optional[t.Sequence[float]] = None):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual
        self.history = list(history or [])


class DegenerateTrace(InsulationError):
    """The boundary trace vanishes identically, so c_v and h_v are undefined."""


class BracketError(InsulationError):
    """A scalar root could not be bracketed."""


class NoThreshold(InsulationError):
    """The critical mass only exists above the convection threshold beta*."""


class DescentError(InsulationError):
    """An alternating minimization step increased the functional."""


class ConfigError(InsulationError):
    """Invalid run configuration."""


def log_exceptions(func):
    """
    Decorator to log exceptions that occur in a function.

    Args:
        func: Function to decorate

    Returns:
        Decorated function
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            logger.error(f"Error in {func.__name__}: {str(e)}")
            logger.debug(traceback.format_exc())
            raise  # Re-raise the exception after logging
    return wrapper


def safe_execution(default_value=None, log_error=True):
    """
    Decorator for functions that should never raise exceptions.

    Args:
        default_value: Value to return if an exception occurs
        log_error: Whether to log exceptions

    Returns:
        Decorator function
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if log_error:
                    logger.error(f"Error in {func.__name__}: {str(e)}")
                    logger.debug(traceback.format_exc())
                return default_value
        return wrapper
    return decorator

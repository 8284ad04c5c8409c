"""Exception hierarchy for qarsim.

Every error raised by the library derives from QarsimError so callers can
catch one type at the CLI boundary and map it to an exit code.
"""

from __future__ import annotations


class QarsimError(Exception):
    """Base class for all qarsim errors."""


class DimensionError(QarsimError):
    """Invalid qudit dimension, basis label, index, or operator shape."""


class ConfigurationError(QarsimError):
    """Invalid or incomplete physical/run configuration."""


class IntegrationError(QarsimError):
    """The ODE integrator failed to advance.

    Carries the last time the solution was still good.
    """

    def __init__(self, message: str, t_last: float):
        super().__init__(message)
        self.t_last = t_last


class StateInvariantError(QarsimError):
    """A density matrix or current set violated a physical invariant."""


class DegenerateSteadyStateError(QarsimError):
    """The generator has more than one steady state (kernel dim > 1)."""


class StaleStateError(QarsimError):
    """A state passed as a steady state is not stationary under the generator."""


class NoResetError(QarsimError):
    """A trace never crossed the reset threshold.

    Carries the final excited population so sweeps can report it.
    """

    def __init__(self, message: str, final_p1: float):
        super().__init__(message)
        self.final_p1 = final_p1


class BudgetError(QarsimError):
    """A scan grid exceeds the configured compute budget."""


class ThermodynamicsError(QarsimError):
    """Invalid thermodynamic input (temperature ordering, zero current, ...)."""


class FitError(QarsimError):
    """Ill-posed fit problem (degenerate data, bad bounds, ...)."""

"""Exception hierarchy shared across the toolkit.

Every error carries optional (regime, t, atom) context so callers and the
CLI can report exactly where a check failed.  Regime indices are printed
1-based to match the CLI and CSV conventions.
"""

from __future__ import annotations


def _context(regime=None, t=None, atom=None) -> str:
    parts = []
    if regime is not None:
        parts.append(f"regime {int(regime) + 1}")
    if t is not None:
        parts.append(f"t={float(t):.6g}")
    if atom is not None:
        parts.append(f"atom {int(atom)}")
    return f" ({', '.join(parts)})" if parts else ""


class RegimeLQError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, *, regime=None, t=None, atom=None):
        super().__init__(f"{message}{_context(regime, t, atom)}")
        self.regime = regime
        self.t = t
        self.atom = atom


class ConfigError(RegimeLQError):
    """Malformed model configuration (schema, shapes, missing keys)."""


class DimensionMismatch(RegimeLQError):
    """A vector does not have the dimension the cone or model expects."""


class NonConservativeGenerator(RegimeLQError):
    """Markov-chain generator row does not sum to zero, or has a negative
    off-diagonal rate."""


class NegativeWeight(RegimeLQError):
    """A nonnegative weight (state cost, terminal cost, or a Hamiltonian
    hinge weight) is negative beyond tolerance."""


class DefinitenessFailure(RegimeLQError):
    """A required positive-(semi)definiteness bound is violated."""


class NoConvergence(RegimeLQError):
    """Inner minimizer hit its iteration cap without meeting tolerance."""


class DefinitenessLost(RegimeLQError):
    """The solver's positive-definiteness side condition failed at a node."""


class NegativeP(RegimeLQError):
    """Integrated solution dipped below zero beyond the round-off clamp."""


class NotSingular(RegimeLQError):
    """A singular-case-only operation was called without singular flags."""


class TimeOutOfRange(RegimeLQError):
    """A query time lies outside the horizon [0, T]."""


class ExplodedPath(RegimeLQError):
    """A simulated path exceeded the magnitude guard, or too many did."""


class VerificationFailed(RegimeLQError):
    """Monte Carlo verification check failed; message names the statistic."""


# Groupings used by the CLI to map errors to exit codes.
VALIDATION_ERRORS = (
    ConfigError,
    DimensionMismatch,
    NonConservativeGenerator,
    NegativeWeight,
    DefinitenessFailure,
)
SOLVER_ERRORS = (
    NoConvergence,
    DefinitenessLost,
    NegativeP,
    NotSingular,
    TimeOutOfRange,
    ExplodedPath,
)

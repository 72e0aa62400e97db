"""Errors raised by the quantum-state and code modules."""


class InvalidArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class InternalConsistencyError(ValueError):
    """A computed state violates a density-matrix invariant."""


class DegenerateRecursionError(ValueError):
    """4*alpha2 - 3*alpha1**2 < 0: noise too high for the fidelity recursion."""

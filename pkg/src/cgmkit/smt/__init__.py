"""Self-contained lazy SMT(LRA) solver with OMT optimization."""

from .solver import Budget, SmtSolver, SolveStats

__all__ = ["SmtSolver", "Budget", "SolveStats"]

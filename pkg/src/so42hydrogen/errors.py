"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """Phase-space point violates an admissibility constraint."""


class SymmetryError(ValueError):
    """Matrix fails a required symmetry check (Hermitian / skew-Hermitian)."""


class RankAmbiguous(RuntimeError):
    """No singular-value gap of the required ratio; numerical rank undecidable."""


class ConstraintError(RuntimeError):
    """A coefficient constraint system has no real solution within tolerance."""

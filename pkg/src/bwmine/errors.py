"""Exception taxonomy shared by all bwmine modules.

Three broad families, used by the CLI to pick exit codes:

* ``InputError``      -- missing or unusable inputs (files, empty corpora).
* ``ValidationError`` -- present but malformed/inconsistent data.
* ``BwmineError``     -- base class; anything else is an internal fault.
"""

from __future__ import annotations


class BwmineError(Exception):
    """Base class for all bwmine errors."""


class InputError(BwmineError):
    """Missing or unusable input (file not found, empty corpus...)."""


class ValidationError(BwmineError):
    """Input exists but violates a contract."""


# --- parsing -------------------------------------------------------------

class MalformedLine(ValidationError):
    """A dump-file line does not match the grammar."""

    def __init__(self, line_no: int, reason: str, line: str = ""):
        self.line_no = line_no
        self.reason = reason
        self.line = line
        super().__init__(f"line {line_no}: {reason}" + (f" [{line!r}]" if line else ""))


class UnknownEventTag(MalformedLine):
    """Record tag is not one of the known event kinds."""


class DuplicateUnitCreation(MalformedLine):
    """Unit id created twice."""


class MatrixSizeMismatch(ValidationError):
    """Declared distance-matrix size does not match the rows present."""


class EmptyCorpus(InputError):
    """Statistics requested over zero games."""


class NoGamesFound(InputError):
    """Ingest directory holds no matched dump triples."""


# --- map regions ---------------------------------------------------------

class ChokeOffGrid(ValidationError):
    pass


class ChokeOnUnwalkable(ValidationError):
    pass


class CenterOffGrid(ValidationError):
    pass


class OffGrid(ValidationError):
    pass


# --- attack tracking -----------------------------------------------------

class UnknownUnit(ValidationError):
    """Event references a unit id never created or discovered."""


class NoAttackerUnits(ValidationError):
    """Attack type requested but the attacker has no involved units."""


# --- compositions --------------------------------------------------------

class EmptyArmy(ValidationError):
    """No units left after scope filtering."""


class UnknownUnitType(ValidationError):
    """Unit type absent from the attribute table."""


class ZeroValueArmy(ValidationError):
    """Army value is zero where a positive value is required."""


# --- mixture models ------------------------------------------------------

class DimensionMismatch(ValidationError):
    """Data dimensionality or basis does not match the model."""


class DegenerateComponent(ValidationError):
    """A mixture component collapsed (near-zero responsibility mass)."""


class TooFewPoints(ValidationError):
    """Fewer data points than mixture components."""

"""Exception hierarchy shared by every dairyplan module."""


class DairyPlanError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DairyPlanError, ValueError):
    """An instance, configuration or file violates a declared invariant.

    ``field`` names the offending attribute, ``locus`` (optional) points into
    a file (e.g. ``"parameters.CrRate[2]"``).
    """

    def __init__(self, message, field=None, locus=None):
        super().__init__(message)
        self.field = field
        self.locus = locus


class DimensionError(DairyPlanError, ValueError):
    """A solution array does not match the instance dimensions."""

    def __init__(self, field, expected, got):
        super().__init__(f"{field}: expected shape {expected}, got {got}")
        self.field = field
        self.expected = expected
        self.got = got


class BrokenTourError(DairyPlanError):
    """Arc selection cannot be decomposed into depot-rooted tours."""

    def __init__(self, stranded_arcs):
        arcs = ", ".join(f"{a}->{b} (vehicle {l}, day {d})" for a, b, l, d in stranded_arcs)
        super().__init__(f"broken tour, stranded arcs: {arcs}")
        self.stranded_arcs = list(stranded_arcs)


class EnumerationLimitError(DairyPlanError):
    """Instance is too large for the exhaustive oracle."""

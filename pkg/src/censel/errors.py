"""Exception types shared across the package."""


class CenselError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CenselError, ValueError):
    """Malformed input file (bad row, bad header, bad token)."""


class ValidationError(CenselError, ValueError):
    """Structurally valid input violating a documented contract."""


class ConfigError(CenselError, ValueError):
    """Bad run/synth configuration (unknown keys, bad values)."""


class NoEventsError(CenselError, ValueError):
    """Survival fit attempted on data without any observed events."""


class NoComparablePairsError(CenselError, ValueError):
    """Concordance requested but no pair of observations is comparable."""


class FitDivergedError(CenselError, RuntimeError):
    """Optimizer failed to recover after repeated step halving."""


class EnsembleError(CenselError, RuntimeError):
    """Too many bootstrap replicates failed to fit."""

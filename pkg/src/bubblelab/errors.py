"""Exception types shared across the package."""


class BubbleLabError(Exception):
    """Base class for package errors."""


class ConfigError(BubbleLabError):
    """Invalid or inconsistent configuration."""


class InvariantViolation(BubbleLabError):
    """An internal accounting or matching invariant was broken; the round is aborted."""


class RankDeficiencyError(BubbleLabError):
    """Regressor matrix is rank-deficient after fixed-effect absorption."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"collinear regressor columns after FE absorption: {self.columns}")


class SingleClusterError(BubbleLabError):
    """Clustered standard errors are undefined with fewer than two clusters."""


class ZeroVarianceError(BubbleLabError):
    """A response or regressor is constant, so the regression is degenerate."""


class SchemaVersionError(BubbleLabError):
    """Artifact schema version does not match what this code writes."""

    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"schema version mismatch: expected {expected!r}, found {found!r}")


class AuditParseError(BubbleLabError):
    """Judge reply failed structural validation; lists every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid audit reply: " + "; ".join(self.violations))

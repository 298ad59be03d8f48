"""Exception types raised across the package.

Each class carries a short ``code`` so that the CLI and reports can refer to
failures by a stable name.
"""


class ChaosCalcError(Exception):
    code = "ERROR"


class DimensionMismatch(ChaosCalcError, ValueError):
    code = "DIM_MISMATCH"


class OrderMismatch(ChaosCalcError, ValueError):
    code = "ORDER_MISMATCH"


class RangeError(ChaosCalcError, ValueError):
    code = "RANGE"


class MixedEvidence(ChaosCalcError):
    """The fraction of vanishing Malliavin determinants is neither ~0 nor ~1."""

    code = "MIXED_EVIDENCE"


class Contradiction(ChaosCalcError):
    """Two absolute-continuity criteria disagree on the same vector."""

    code = "CONTRADICTION"


class Degenerate(ChaosCalcError):
    code = "DEGENERATE"


class CapTooLarge(ChaosCalcError):
    code = "CAP_TOO_LARGE"


class UnsupportedDim(ChaosCalcError):
    code = "UNSUPPORTED_DIM"


class SolverError(ChaosCalcError):
    code = "SOLVER_ERROR"


class ConfigError(ChaosCalcError):
    code = "CONFIG"

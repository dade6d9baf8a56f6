"""Exception taxonomy.

Exit-code mapping used by the CLI: ConfigError family -> 2, DataError
family -> 3, NumericError family -> 4.
"""


class BoxparseError(Exception):
    """Base class for all errors raised by this package."""


class DataError(BoxparseError):
    """Malformed or inconsistent input data."""


class EmptyInput(DataError):
    pass


class UnboundVariable(DataError):
    pass


class DuplicateReferent(DataError):
    pass


class UnknownOperator(DataError):
    pass


class CyclicStructure(DataError):
    pass


class AmbiguousMerge(DataError):
    """Presupposed box whose variables are consumed by several sibling boxes."""


class MalformedSequence(DataError):
    pass


class MalformedTree(DataError):
    pass


class MalformedConllu(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class PairingError(DataError):
    pass


class ConfigError(BoxparseError):
    """Invalid configuration requested."""


class UnsupportedFeatureCombination(ConfigError):
    """Encoder/feature-mask combination that cannot be constructed."""


class NumericError(BoxparseError):
    """Numerical failure: shape mismatch, NaN/Inf loss, failed gradient check."""


class ShapeError(NumericError):
    pass


class InternalContractViolation(NumericError):
    """A decoder stage received inputs inconsistent with the previous stage."""


class TruncatedOutput(BoxparseError):
    """Decoding hit the length budget before the structure was closed."""

"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: DataError -> 1, ContractError -> 2.
"""


class ImpartialError(Exception):
    """Base class for all package errors."""


class DataError(ImpartialError):
    """Bad input data: ingestion failures, non-finite values, misaligned files."""


class ContractError(ImpartialError):
    """API misuse: dimension mismatches, invalid schema/variant/mode combinations."""


class SchemaError(ContractError):
    """Invalid schema definition or schema/data disagreement."""


class VariantError(ContractError):
    """Estimator variant requested on an incompatible design."""

"""Exception hierarchy shared by every module."""


class DeclcfError(Exception):
    """Base class for all package errors."""


class InputError(DeclcfError):
    """Malformed user input (files, configs). Maps to CLI exit code 2."""


class DataError(DeclcfError):
    """Well-formed input whose content cannot be used. Maps to CLI exit code 3."""


class ParseError(InputError):
    pass


class ConfigError(InputError):
    pass


class IntegrityError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass


class SynthesisError(DataError):
    pass


class EmptyModelError(DataError):
    pass


class EmptyLogError(DataError):
    pass


class SchemaError(DataError):
    pass


class DegenerateDataError(DataError):
    pass

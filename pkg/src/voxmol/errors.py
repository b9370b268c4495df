"""Exception types shared across the package."""


class VoxmolError(Exception):
    """Base class for voxmol-specific failures."""


class ParseError(VoxmolError, ValueError):
    """A structure or metadata file could not be parsed.

    Carries the source (path or description) and 1-based line number when
    known, so callers can point at the offending input.
    """

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        loc = ""
        if source is not None and line is not None:
            loc = f"{source}:{line}: "
        elif source is not None:
            loc = f"{source}: "
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(loc + message)


class FormatError(VoxmolError, ValueError):
    """A binary container (cache file, NPY file) is malformed or truncated."""


class ConfigError(VoxmolError, ValueError):
    """Options are inconsistent with each other or with the dataset."""

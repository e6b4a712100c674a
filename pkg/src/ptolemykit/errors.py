"""Exception hierarchy shared by all checks."""


class PtolemyError(ValueError):
    """Base class for every error raised by ptolemykit."""


class InvalidInput(PtolemyError):
    pass


class DegenerateQuadruple(PtolemyError):
    """All three cross-ratio products vanish, so the triple is undefined."""


class DivergentProduct(PtolemyError):
    """Gromov product of a boundary point with itself."""


class Unsupported(PtolemyError):
    """The input lacks structure a check needs."""


class UnsupportedSpace(Unsupported):
    """The space lacks the structure (midpoints, exact arithmetic, ...) a check needs."""


class UnsupportedSet(Unsupported):
    pass


class UnsupportedGroup(Unsupported):
    """Exact enumeration was requested on floating-point generators."""

"""Exception hierarchy shared by all modules."""


class ProjviError(Exception):
    """Base class for every error raised by the package."""


class NonFinite(ProjviError, ArithmeticError):
    pass


class RankDeficient(ProjviError, ValueError):
    pass


class NotPositiveDefinite(ProjviError, ValueError):
    pass


class TooFarFromManifold(ProjviError, ValueError):
    pass


class DegenerateInput(ProjviError, ValueError):
    pass


class ShapeMismatch(ProjviError, ValueError):
    pass


class ShapeInvalid(ProjviError, ValueError):
    pass


class AntipodalPoints(ProjviError, ValueError):
    pass


class SingularCrossProduct(ProjviError, ValueError):
    pass


class ConfigInvalid(ProjviError, ValueError):
    pass


class IOFailure(ProjviError, OSError):
    pass

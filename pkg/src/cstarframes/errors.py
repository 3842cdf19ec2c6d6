"""Exception hierarchy shared by every module of the package."""


class CStarFramesError(Exception):
    pass


class SignatureMismatch(CStarFramesError, ValueError):
    pass


class ShapeMismatch(CStarFramesError, ValueError):
    pass


class NotHermitian(CStarFramesError, ValueError):
    pass


class NotPositive(CStarFramesError, ValueError):
    pass


class Singular(CStarFramesError, ValueError):
    pass


class RankMismatch(CStarFramesError, ValueError):
    pass


class NotProjection(CStarFramesError, ValueError):
    pass


class NotFrame(CStarFramesError, ValueError):
    pass


class NotParseval(CStarFramesError, ValueError):
    pass


class NoComplement(CStarFramesError, ValueError):
    pass


class SingularGram(CStarFramesError, ValueError):
    pass


class NotUnitNorm(CStarFramesError, ValueError):
    pass


class StepSizeOutOfRange(CStarFramesError, ValueError):
    pass


class SolverFailed(CStarFramesError, RuntimeError):
    pass


class SingularMarginal(CStarFramesError, ValueError):
    pass


class Degenerate(CStarFramesError, RuntimeError):
    pass


class NonCommutative(CStarFramesError, ValueError):
    pass


class HypothesisViolated(CStarFramesError, ValueError):
    pass


class ConfigError(CStarFramesError, ValueError):
    pass


class FormatError(CStarFramesError, ValueError):
    pass

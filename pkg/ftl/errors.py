class FTLException(Exception):
    """
    Base error carrying a human readable detail and the process exit code
    the command line maps it to.
    """

    exit_code = 1

    def __init__(self, detail: str, *, exit_code: int = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self):
        return self.detail


class UsageError(FTLException):
    exit_code = 2


class DomainError(FTLException):
    exit_code = 2


class ExperimentFailure(FTLException):
    exit_code = 3

    def __init__(self, detail: str, *, suite: str):
        super().__init__(f"{suite}: {detail}")
        self.suite = suite


class NumericFailure(FTLException):
    exit_code = 4


class ChartError(NumericFailure):
    pass


class ZeroDenominatorError(NumericFailure, ZeroDivisionError):
    pass


class SingularFrameError(NumericFailure):
    pass


class SingularEvaluationError(NumericFailure):
    pass


class TypeExceedsError(NumericFailure):
    def __init__(self, detail: str, *, point=None, k_max: int = None):
        super().__init__(detail)
        self.point = point
        self.k_max = k_max


class SingularProductError(NumericFailure):
    def __init__(self, detail: str, *, stage: int):
        super().__init__(f"stage {stage}: {detail}")
        self.stage = stage

class WeakExpandError(ValueError):
    """Base class for all library errors."""


class PopulationError(WeakExpandError):
    pass


class UndefinedConditionalError(WeakExpandError):
    """Conditioning on a set of zero probability."""


class GraphError(WeakExpandError):
    pass


class IsolatedPointError(WeakExpandError):
    """Robustness requested at a point with no (positive-mass) neighbors."""


class ParameterError(WeakExpandError):
    """A numeric argument lies outside its declared range."""


class EmpiricalEstimateError(WeakExpandError):
    pass


class NoQualifyingSetError(WeakExpandError):
    """No member of a set family passes the q threshold."""


class EnumerationLimitError(WeakExpandError):
    pass


class LearnerError(WeakExpandError):
    def __init__(self, draw, exc):
        super().__init__(f"learner failed on draw {draw}: {exc!r}")
        self.draw = draw
        self.__cause__ = exc

"""Exception hierarchy.

Validation problems derive from :class:`ModelError` (a ``ValueError``), numerical
failures from :class:`NumericalError`. The CLI maps the two families to exit
codes 2 and 3.
"""


class ModelError(ValueError):
    """Input does not describe a valid inventory system or kernel request."""


class NoFloor(ModelError):
    """No absorbing level with rate 0 exists, so outstanding orders are unbounded."""


class InvalidRate(ModelError):
    """A rate is not a finite non-negative number."""


class NegativeRate(InvalidRate):
    pass


class ZeroInteriorRate(ModelError):
    """A zero rate strictly between the floor and the top level."""


class IncompleteRange(ModelError):
    """The rate table does not cover exactly the levels ``[l_L, r+q]``."""


class FloorAboveReorderPoint(ModelError):
    pass


class LevelOutOfRange(ModelError):
    pass


class NotQ1(ModelError):
    """A q=1 routine received a policy with another order quantity."""


class EmptyChain(ModelError):
    pass


class PoleHit(ModelError):
    """A transform was evaluated exactly at one of its poles."""


class NumericalError(ArithmeticError):
    """A numerical routine could not deliver its accuracy contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AccuracyNotReached(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class SimulationStalled(NumericalError):
    """Neither a demand nor an order arrival can ever happen again."""

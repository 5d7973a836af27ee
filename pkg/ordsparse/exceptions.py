

class OrdSparseException(Exception):
    """ A base exception from which all exceptions raised by ordsparse are subclassed.
    """


class OrdSparseMisconfigured(ValueError, OrdSparseException):
    """ An exception for all cases of misconfiguration, of solvers, settings or models.
    """

    UNSUPPORTED_MODEL = "The {} solver can't handle the regularizer '{}' combined with the constraint '{}'."


class DomainError(ValueError, OrdSparseException):
    """ Raised if an argument lies outside the domain of an operation.
    """


class InfeasiblePointError(DomainError):
    """ Raised if a point ``x`` with ``|x|`` outside of the constraint set is provided where feasibility is required.
    """

    def __init__(self, *args, point=None, **kwargs):
        super().__init__(*args, **kwargs)

        #: The offending point
        self.point = point


class SolverFault(OrdSparseException):
    """ Raised if a solver hits a numerical inconsistency, e.g. a line search which never accepts.
    """

    def __init__(self, *args, extra_info=None, **kwargs):
        super().__init__(*args, **kwargs)

        #: Extra information what failed
        self.extra_info = extra_info

    def __str__(self):
        if self.extra_info is None:
            return super().__str__()
        return "{}\n\n{}".format(
            super().__str__(),
            self.extra_info
        )


class LineSearchError(SolverFault):
    """ Raised if the backtracking on ``eta`` or ``gamma`` exceeds its cap.
    """


class DataError(ValueError, OrdSparseException):
    """ Raised if experiment data is missing, unreadable or too short for the requested construction.
    """

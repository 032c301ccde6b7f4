"""Exceptions that are used by pymultivote."""


class MultiVoteException(Exception):

    """Base class for all pymultivote exceptions."""


class InvalidParameterError(MultiVoteException, ValueError):

    """Raised if a numeric parameter is outside its admissible range.

    Examples are a non-positive noise scale, a δ outside (0, 1) or a label
    probability outside [0, 1].
    """


class GridMismatchError(MultiVoteException):

    """Raised when RDP curves on different order grids are combined."""


class EmptyBallotsError(MultiVoteException):

    """Raised when an aggregation is asked to run over zero voters."""


class DomainTooLargeError(MultiVoteException):

    """Raised if the brute-force sensitivity oracle would have to enumerate a
    ballot space larger than the configured limits."""


class OracleModeError(MultiVoteException):

    """Raised when a zero noise scale is used without explicitly asking for
    the non-private oracle mode."""


class BallotFormatError(MultiVoteException):

    """Raised when a ballot file cannot be parsed.

    Attributes:
        line_number (int): The 1-based line of the offending row
        reason (str): What was wrong with it
    """

    def __init__(self, line_number, reason):
        """
        Args:
            line_number (int): The 1-based line of the offending row
            reason (str): What was wrong with it
        """
        super().__init__()
        self.line_number = line_number
        self.reason = reason

    def __str__(self):
        return "Malformed ballot file at line {}: {}".format(
            self.line_number, self.reason
        )


class LedgerFileError(MultiVoteException):

    """Raised when a persisted budget ledger is corrupt or inconsistent.

    The original exception, if any, is available as ``__cause__``.
    """

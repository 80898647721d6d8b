"""Exception hierarchy shared by all crcodes modules."""


class CRCError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(CRCError, ValueError):
    pass


class InvalidScenario(CRCError, ValueError):
    pass


class InvalidHistory(CRCError, ValueError):
    pass


class ScaleExceeded(CRCError, ValueError):
    """Requested instance is beyond the size an exhaustive routine accepts."""


class Infeasible(CRCError, ValueError):
    pass


class SingularMatrix(CRCError, ArithmeticError):
    pass


class RankDeficient(CRCError):
    """The chosen devices do not span the code space; decoding is impossible."""

    def __init__(self, rank, needed):
        super().__init__(f"collected coefficients have rank {rank}, need {needed}")
        self.rank = rank
        self.needed = needed


class FileTooSmall(CRCError, ValueError):
    pass


class NotEnoughDonors(CRCError, ValueError):
    pass


class DeadDonor(CRCError, ValueError):
    pass


class TooManyFailures(CRCError, ValueError):
    pass


class BlockFormatError(CRCError, ValueError):
    pass

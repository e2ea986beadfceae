"""Exception hierarchy shared by the birds modules."""


class BirdsError(Exception):
    """Base class for every error raised by this package."""


class EnergyExhausted(BirdsError):
    """A debit would drive a UAV battery below zero."""


class Overload(BirdsError):
    """Requested payload exceeds the UAV's carrying capacity."""


class InfeasibleLink(BirdsError):
    """A packet cannot be delivered over a zero-rate link."""


class EmptyBlock(BirdsError):
    """Blocks must carry at least one transaction."""


class BlockRejected(BirdsError):
    """append_block refused a candidate block."""


class AlreadyRegistered(BirdsError):
    pass


class MalformedRegistration(BirdsError):
    pass


class DecodeError(BirdsError):
    """Byte stream does not decode to a well-formed ledger object."""


class NoEligibleCandidate(BirdsError):
    """No UAV may propose a block this round."""


class DegenerateEnergyState(BirdsError):
    """Miner-energy formula hit a nonpositive denominator."""


class DivisionDegenerate(BirdsError):
    """Instant reward requested with zero users served."""


class InvalidParameter(BirdsError, ValueError):
    pass


class ConfigError(BirdsError):
    """Scenario text could not be parsed; ``lineno`` is 1-based or None."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)

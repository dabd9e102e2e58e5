"""Exception hierarchy shared by every layer of the simulator."""


class TransducerNetError(Exception):
    """Base class for all library errors."""


# registry
class UnassignedId(TransducerNetError, ValueError):
    pass


class DuplicateId(TransducerNetError, ValueError):
    pass


# bus
class AlreadyPresent(TransducerNetError):
    pass


class NotPresent(TransducerNetError):
    pass


class NotASensor(TransducerNetError):
    pass


class NotAnActuator(TransducerNetError):
    pass


# node
class WrongNode(TransducerNetError):
    pass


# protocol
class ProtocolError(TransducerNetError, ValueError):
    """Any rejection by the XML codec."""


class MalformedXml(ProtocolError):
    pass


class SchemaViolation(ProtocolError):
    pass


class InvariantViolation(ProtocolError):
    pass


# simkernel
class PastEvent(TransducerNetError, ValueError):
    pass


# energy
class NegativeDebit(TransducerNetError, ValueError):
    pass


class MismatchedHorizon(TransducerNetError, ValueError):
    pass


class MismatchedTransducers(TransducerNetError, ValueError):
    pass


# scenario
class UnknownChannel(TransducerNetError, KeyError):
    pass


class ParseError(TransducerNetError, ValueError):
    pass


class ValidationError(TransducerNetError, ValueError):
    """Scenario validation failure; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


# server
class EmptyStore(TransducerNetError):
    pass

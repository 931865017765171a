"""Exception hierarchy shared by all protocol modules."""


class QRPLError(Exception):
    """Base class for protocol errors."""


class DomainError(QRPLError, ValueError):
    """An argument is outside its valid domain (negative value, bad fraction...)."""


class MalformedKeyError(DomainError):
    pass


class ConstraintViolation(QRPLError):
    """A proof witness does not satisfy its statement."""


class TransactionError(QRPLError):
    pass


class ImbalanceError(TransactionError):
    def __init__(self, detail: str = ""):
        msg = "Value imbalance in transaction"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnknownInputError(TransactionError):
    pass


class DoubleSpendError(TransactionError):
    pass


class ProtocolViolation(QRPLError):
    pass


class StaleSwapError(ProtocolViolation):
    pass


class ConfigurationError(QRPLError, ValueError):
    pass


class NoEligibleValidatorError(QRPLError):
    pass


class ThresholdError(QRPLError):
    pass


class TierLimitError(QRPLError):
    pass


class InsufficientFundsError(QRPLError):
    pass


class ChecksumError(QRPLError):
    pass


class IncompletePayloadError(QRPLError):
    pass

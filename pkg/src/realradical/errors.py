"""Exception hierarchy shared by all modules."""


class RealRadicalError(Exception):
    """Base class for every error raised by this package."""


# polysys
class UnknownVariable(RealRadicalError, ValueError):
    pass


class MalformedTerm(RealRadicalError, ValueError):
    pass


class EmptyPolynomial(RealRadicalError, ValueError):
    pass


class DimensionMismatch(RealRadicalError, ValueError):
    pass


class ZeroPolynomial(RealRadicalError, ValueError):
    pass


# linalg
class NonFinite(RealRadicalError, ValueError):
    pass


class UnsortedInput(RealRadicalError, ValueError):
    pass


class NoConvergence(RealRadicalError, ArithmeticError):
    pass


class NotSymmetric(RealRadicalError, ValueError):
    pass


class NotPositiveDefinite(RealRadicalError, ArithmeticError):
    pass


# moment / sdp
class OrderTooLarge(RealRadicalError, ValueError):
    pass


class OrderTooSmall(RealRadicalError, ValueError):
    pass


class DegreeTooLarge(RealRadicalError, ValueError):
    pass


class NotFlat(RealRadicalError, ArithmeticError):
    pass


class InconsistentEntries(RealRadicalError, ArithmeticError):
    pass


class NumericalFailure(RealRadicalError, ArithmeticError):
    pass


# extract
class BasisIncomplete(RealRadicalError, ArithmeticError):
    pass


class SingularBasisBlock(RealRadicalError, ArithmeticError):
    pass


class DegenerateSpectrum(RealRadicalError, ArithmeticError):
    pass


class NonCommuting(RealRadicalError, ArithmeticError):
    def __init__(self, message, comm_error=None):
        super().__init__(message)
        self.comm_error = comm_error


class NotOrderIdeal(RealRadicalError, ValueError):
    pass


class NotStandardMonomialBasis(RealRadicalError, ValueError):
    pass


# complex mode
class ComplexCoefficientsUnsupported(RealRadicalError, ValueError):
    pass


# cli
class ParseError(RealRadicalError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderExhausted(RealRadicalError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

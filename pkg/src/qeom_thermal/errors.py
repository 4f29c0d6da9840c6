"""Exception types shared across the package."""


class QeomError(Exception):
    """Base class for all package errors."""


# io
class MissingHeaderField(QeomError):
    pass


class IndexOutOfRange(QeomError):
    pass


class MalformedLine(QeomError):
    pass


class ConflictingDuplicate(QeomError):
    pass


class ValidationFailed(QeomError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class IoFailure(QeomError):
    pass


# operators / simulator
class QubitCountMismatch(QeomError):
    pass


class NonHermitianInput(QeomError):
    pass


class EmptySector(QeomError):
    pass


# groundstate
class OddElectronCount(QeomError):
    pass


class SizeMismatch(QeomError):
    pass


# eom
class MissingExpectation(QeomError):
    def __init__(self, label):
        super().__init__(f"no expectation value supplied for Pauli string {label!r}")
        self.label = label


class SingularMetric(QeomError):
    pass


# povm
class NotInformationallyComplete(QeomError):
    pass


class EmptyRecord(QeomError):
    pass


# thermal
class EmptySpectrum(QeomError):
    pass


class DimensionMismatch(QeomError):
    pass

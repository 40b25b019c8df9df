"""Exception types and default size caps."""

DENSE_CAP = 12
ENUMERATION_CAP = 24
SPECTRAL_CAP = 26


class ValidationError(ValueError):
    """Input violates a structural or algebraic requirement."""


class FlowError(ValidationError):
    """A resource state fails the flow conditions."""


class NoFlowError(FlowError):
    """No correction operator exists for some measured qubit under the given order."""

    def __init__(self, qubit, message=None):
        self.qubit = qubit
        super().__init__(message or f"no flow: no valid R operator for measured qubit {qubit}")


class CapExceededError(ValueError):
    """Requested size exceeds a configured cap."""

    def __init__(self, what, size, cap):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: size {size} exceeds cap {cap}")


def check_cap(what, size, cap):
    if size > cap:
        raise CapExceededError(what, size, cap)

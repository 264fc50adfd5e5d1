"""Exception hierarchy for kernel operations.

Every kernel error carries a stable machine-readable ``code`` so callers
(the HTTP service, the CLI exit-code mapping) can dispatch without parsing
messages.
"""

from __future__ import annotations


class KernelError(Exception):
    """Base class for all semantic-kernel failures."""

    code = "KERNEL_ERROR"


class UnknownClassifierError(KernelError):
    code = "UNKNOWN_CLASSIFIER"


class UnknownNameError(KernelError):
    """A rule or query referenced an association, end or attribute that
    does not exist in the target model."""

    code = "UNKNOWN_NAME"


class IllFormedModelError(KernelError):
    """A semantic operation was invoked on a model that fails well-formedness."""

    code = "ILL_FORMED_MODEL"


class ScopeTooLargeError(KernelError):
    """Raw candidate count exceeds the enumeration guard limit."""

    code = "SCOPE_TOO_LARGE"


class SideConditionError(KernelError):
    """A transformation rule's side condition is violated."""

    code = "SIDE_CONDITION_VIOLATED"


class ResultIllFormedError(KernelError):
    """Applying a rule produced a model that fails well-formedness."""

    code = "RESULT_ILL_FORMED"


class ProofStepError(KernelError):
    """A proof step failed to apply; wraps the underlying kernel error and
    records the 1-based step index."""

    def __init__(self, step: int, cause: KernelError):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.code = cause.code

class HamoscError(RuntimeError):
    pass


class NotHermitian(HamoscError):
    def __init__(self, defect, scale):
        self.defect = defect
        self.scale = scale
        super().__init__(f'Matrix is not Hermitian: |M - M*| = {defect:.3e} (|M| = {scale:.3e})')


class NotPSD(HamoscError):
    def __init__(self, smallest, largest):
        self.smallest = smallest
        self.largest = largest
        super().__init__(f'Matrix is not positive semidefinite: lambda_1 = {smallest:.3e}, lambda_n = {largest:.3e}')


class ParseError(HamoscError):
    def __init__(self, message, offset, expected=frozenset()):
        self.offset = offset  # byte offset into the UTF-8 encoded text
        self.expected = frozenset(expected)
        self.reason = message
        expected_str = ''
        if self.expected:
            expected_str = f' (expected one of: {", ".join(sorted(self.expected))})'
        super().__init__(f'{message} at offset {offset}{expected_str}')


class DomainError(HamoscError):
    def __init__(self, reason, where=None, t=None):
        self.reason = reason
        self.where = where
        self.t = t
        location = f' in {where}' if where is not None else ''
        at = f' at t={t!r}' if t is not None else ''
        super().__init__(f'{reason}{location}{at}')


class StepSizeUnderflow(HamoscError):
    def __init__(self, t, h):
        self.t = t
        self.h = h
        super().__init__(f'Step size {h:.3e} fell below the minimum at t={t!r}')


class StepLimitExceeded(HamoscError):
    def __init__(self, t, steps):
        self.t = t
        self.steps = steps
        super().__init__(f'Gave up after {steps} steps at t={t!r}')


class NonPositiveP(HamoscError):
    def __init__(self, t, value):
        self.t = t
        self.value = value
        super().__init__(f'p(t) must be positive, got p({t!r}) = {value!r}')


class InterpolationGap(HamoscError):
    def __init__(self, t, reason):
        self.t = t
        super().__init__(f'Cannot interpolate at t={t!r}: {reason}')


class GridMismatch(HamoscError):
    pass


class PreconditionViolated(HamoscError):
    def __init__(self, condition, where=None):
        self.condition = condition
        self.where = where
        at = f' (first failure at t={where!r})' if where is not None else ''
        super().__init__(f'Precondition violated: {condition}{at}')


class NoSolution(HamoscError):
    def __init__(self, t, detail='', subject='Linear matrix equation'):
        self.t = t
        super().__init__(f'{subject} has no solution at t={t!r}{": " + detail if detail else ""}')


class IndefiniteB(HamoscError):
    def __init__(self, t):
        self.t = t
        super().__init__(f'B(t) is neither positive nor negative definite at t={t!r}')


class SingularB(HamoscError):
    def __init__(self, t, smallest):
        self.t = t
        self.smallest = smallest
        super().__init__(f'B(t) is singular at t={t!r} (lambda_1 = {smallest:.3e})')


class ConfigError(HamoscError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f'Improper config {path}: {reason}')

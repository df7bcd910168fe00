"""Exception hierarchy.

Every domain error carries its class name as the machine-readable code the
CLI prints, so names here are part of the public surface.
"""


class RNftError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# registry
class UnknownToken(RNftError):
    pass


class UnknownReferent(RNftError):
    pass


class DuplicateReferent(RNftError):
    pass


class SelfReference(RNftError):
    pass


class InvalidWeights(RNftError):
    pass


class WeightShapeMismatch(InvalidWeights):
    pass


class WeightSumExceedsOne(InvalidWeights):
    pass


class AlreadyReferenced(RNftError):
    pass


class TemporalOrderViolation(RNftError):
    pass


class CycleDetected(RNftError):
    pass


class NotOwner(RNftError):
    pass


# ledger
class InvalidSignature(RNftError):
    pass


class BadNonce(RNftError):
    pass


class GenesisInvalid(RNftError):
    pass


# incentive engine
class InvalidParams(RNftError):
    pass


class SigmaOutOfRange(RNftError):
    pass


class CountShapeMismatch(RNftError):
    pass


class StepTooLarge(RNftError):
    pass


# simulator
class ConfigInvalid(RNftError):
    pass

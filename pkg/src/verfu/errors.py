"""Exception types shared across the protocol kit."""


class VerfuError(Exception):
    """Base class for all library-specific errors."""


class NotInvertible(VerfuError):
    """Element has no modular inverse (gcd with modulus != 1)."""


class MessageOutOfRange(VerfuError):
    """Plaintext outside the encryptable range [0, n)."""


class InvalidCiphertext(VerfuError):
    """Ciphertext is not a unit mod n^2 or lies outside (0, n^2)."""


class LengthMismatch(VerfuError):
    """Vector operands have different lengths."""


class DimMismatch(VerfuError):
    """Input dimension disagrees with the configured parameter dimension."""


class CoordinateOutOfRange(VerfuError):
    """Residue lies outside the expected range for the modulus."""


class OutOfBound(VerfuError):
    """Real value exceeds the fixed-point encoding bound."""


class DuplicateDevice(VerfuError):
    """Two messages from the same device in one phase."""


class MissingDevice(VerfuError):
    """Referenced device is not present where required."""


class EmptyCohort(VerfuError):
    """A round needs at least one participating device."""


class MissingOpening(VerfuError):
    """A cohort member's opening is absent from the broadcast set."""


class TargetNotInCohort(VerfuError):
    """Adversary behavior targets a device outside the current cohort."""


class TrapdoorRequired(VerfuError):
    """Behavior needs the commitment trapdoor but none was provided."""


class ConfigError(VerfuError):
    """Malformed or inconsistent run configuration."""

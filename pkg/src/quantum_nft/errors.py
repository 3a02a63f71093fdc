class QuantumNftError(RuntimeError):
    """Base class for every error raised by the simulator."""


class CapacityError(QuantumNftError):
    """A register or payload exceeds the desk-scale limits."""


class QubitIndexError(QuantumNftError, IndexError):
    """Qubit indices are out of range or repeated."""


class ParameterError(QuantumNftError, ValueError):
    """A numeric parameter is outside its allowed range."""


class ConstraintError(QuantumNftError, ValueError):
    """The chain weight budget sum(theta_A + theta_B) < pi would be violated."""


class CodecError(QuantumNftError, ValueError):
    """Classical information does not fit the chain's phase encoding."""


class DecodeError(CodecError):
    """A phase does not sit on the encoding lattice."""


class OrderingError(QuantumNftError):
    """A block was appended out of sequence."""


class ConsensusError(QuantumNftError):
    """Proof-of-stake selection or bookkeeping failed."""


class PolicyError(ConsensusError):
    """A stake operation violates the genesis policy."""


class ProtocolError(QuantumNftError):
    """A protocol message or register has the wrong shape."""


class TomographyError(QuantumNftError):
    """Tomography data is incomplete or inconsistent."""


class CalibrationError(TomographyError):
    """The requested fidelity cannot be reached in the noise search range."""


class InvariantError(QuantumNftError):
    """An internal invariant was breached at runtime."""


class ConfigError(QuantumNftError, ValueError):
    """
    Invalid genesis configuration.

    Carries the dotted path of the offending field so the CLI can report it.
    """

    def __init__(self, field_path: str, message: str) -> None:
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
        self.message = message

from .gradcheck import grad_check
from .random import ALGORITHM, SeededRng
from .tape import Tape, Value

__all__ = ["Tape", "Value", "SeededRng", "ALGORITHM", "grad_check"]

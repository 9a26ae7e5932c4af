"""Green500-style power-efficiency measurement toolkit."""
from .errors import CoverageError, DataError, DomainError, Green500Error, ParseError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CoverageError",
    "DataError",
    "DomainError",
    "Green500Error",
    "ParseError",
    "__version__",
]

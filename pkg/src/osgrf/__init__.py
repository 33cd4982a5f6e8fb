"""Operator-scaling Gaussian random fields: synthesis and anisotropy estimation."""
from .besov import *  # noqa: F401,F403
from .errors import (ConfigurationError, DomainError, InsufficientDataError, InvalidAnisotropyError,
                     InvalidSpecError, NumericError, OSGRFError)
from .estimate import *  # noqa: F401,F403
from .linalg import *  # noqa: F401,F403
from .pseudonorm import *  # noqa: F401,F403
from .synthesis import *  # noqa: F401,F403
from .wavelet import *  # noqa: F401,F403

__version__ = "0.1.0"

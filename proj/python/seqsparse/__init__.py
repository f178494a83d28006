"""Sequential sparse support recovery: bounds, procedures and Monte Carlo experiments."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

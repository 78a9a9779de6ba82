"""Neural and polynomial surrogates of HVAC performance maps."""

from ._surromap import *  # noqa: F401,F403
from ._surromap import __version__  # noqa: F401

from ._dsb import *  # noqa: F401,F403
from ._dsb import __version__  # noqa: F401

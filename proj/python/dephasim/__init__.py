"""Dephasing simulator and noise-budget toolkit for optically trapped qubits."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

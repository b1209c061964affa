"""Dampened Mann iteration for monotone non-expansive maps, MDPs and stochastic games."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

"""Fractional capacity of convex bodies."""

from ._fraccap import *  # noqa: F401,F403
from ._fraccap import __doc__  # noqa: F401

__version__ = "0.1.0"

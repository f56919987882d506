"""Semiclassical spectral asymptotics for constant-field magnetic Schrodinger
operators: closed-form Weyl densities, discretized operators with three
counting engines, classical cyclotron/drift dynamics, and remainder-scaling
experiments."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401

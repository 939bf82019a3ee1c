"""Planar hexagonal and quad remeshing of triangle surfaces."""

from ._cpfmesh import *  # noqa: F401,F403
from ._cpfmesh import __version__  # noqa: F401

"""Flat geometry, hourglass ratio and Hodge-norm numerics on half-translation surfaces."""
from .errors import *  # noqa: F401,F403
from .surface import (FlatSurface, Gluing, GluingKind, Singularity, apply_flow, build_surface,
                      delaunay, genus2_example, orienting_double_cover, standard_surface)

__version__ = "0.1.0"

"""CMC surfaces in metric Lie groups and the product spaces S^2 x R, H^2 x R.

Modules: ``group`` (spaces and group laws), ``frames`` (metric, connection,
Killing fields, geodesics), ``subgroups`` (SL(2,R) characters and the
Gauss map of its two-dimensional subgroups), ``surface`` (immersions,
fundamental forms, stability spectrum), ``cmc`` (profile ODEs, H-spheres,
invariant surfaces), ``flux`` and ``cli``.
"""

from .group import SpaceError, SpaceSpec, builtin_space, load_space

__all__ = ["SpaceError", "SpaceSpec", "builtin_space", "load_space"]
__version__ = "0.1.0"

"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`HullcutError`
so callers (and the CLI) can separate bad input from programming errors.
"""


class HullcutError(Exception):
    """Base class for all library errors."""


class DegenerateInputError(HullcutError, ValueError):
    """Input geometry has no usable extent (coincident vertices, empty mesh)."""


class MeshFormatError(HullcutError, ValueError):
    """A mesh file could not be parsed."""


class ValidationError(HullcutError, ValueError):
    """A mesh failed the watertight / orientation checks required by an operation."""


class EmptySurfaceError(HullcutError, ValueError):
    """The requested level set does not intersect the grid."""


class GridSizeError(HullcutError, ValueError):
    """Grid resolution or padding is outside the supported range."""


class DegenerateHullError(HullcutError, ValueError):
    """Fewer than four points, or all points (nearly) coplanar."""


class EmptySideError(HullcutError, ValueError):
    """A cutting plane leaves one side of the mesh empty."""


class DegenerateCutError(HullcutError, ValueError):
    """Cross-section loops could not be traced or triangulated."""


class NoUsefulPlaneError(HullcutError, ValueError):
    """No candidate plane cuts any visibility edge."""

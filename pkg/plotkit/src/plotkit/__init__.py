"""Figure rendering for fragmentation solver CSV bundles."""

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    MissingColumnsError,
    PlotkitError,
    bundle_specs,
    read_table,
    render,
    render_bundle,
)

__version__ = "0.1.0"

"""Figure rendering for zsparse pipeline artifacts."""

from .render import (
    FigureSpec,
    LANDMARK_SLOPES,
    RenderInputError,
    build_fraction_curves_figure,
    build_scaling_figure,
    render_fraction_curves,
    render_scaling_figure,
)

__version__ = "0.1.0"

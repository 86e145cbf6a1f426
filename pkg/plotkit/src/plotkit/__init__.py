"""plotkit: figure rendering for fairadd report artifacts."""

__version__ = "0.1.0"

from .render import FigureRequest, RenderError, render

__all__ = ["FigureRequest", "RenderError", "render", "__version__"]

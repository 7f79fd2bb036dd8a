"""Figure rendering for spinrelay CSV outputs."""

from .render import (
    FigureSpec,
    SchemaError,
    build_figure,
    default_spec,
    load_sweep_csv,
    load_trace_csv,
    main,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "default_spec",
    "load_sweep_csv",
    "load_trace_csv",
    "main",
    "render",
]

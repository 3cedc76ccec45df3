"""Figure generation for sphgas run outputs."""

from .figures import FigureRequest, SchemaError, load_series, render

__version__ = "0.1.0"

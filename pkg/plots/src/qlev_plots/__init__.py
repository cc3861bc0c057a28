"""Figure rendering for the lattice scattering engine's published files."""

from .figures import (
    KINDS,
    FigureSpec,
    render,
    render_hexagon_trace,
    render_phase_trace,
    render_sweep_census,
)
from .io import (
    SchemaError,
    read_hexagon_csv,
    read_hexagon_json,
    read_levinson_json,
    read_manifest_csv,
    read_trace_csv,
)

__all__ = [
    "KINDS",
    "FigureSpec",
    "SchemaError",
    "render",
    "render_hexagon_trace",
    "render_phase_trace",
    "render_sweep_census",
    "read_hexagon_csv",
    "read_hexagon_json",
    "read_levinson_json",
    "read_manifest_csv",
    "read_trace_csv",
]

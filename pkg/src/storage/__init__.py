from .artifacts import FORMATS, render_json, render_csv, write_artifact

__all__ = [
    "FORMATS",
    "render_json",
    "render_csv",
    "write_artifact",
]

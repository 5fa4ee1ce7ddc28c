"""Model front ends: native text format and the XMI dialect."""

from __future__ import annotations

from pathlib import Path

from ..model import QumModel
from .native import NativeSyntax, parse_native
from .xmi import MissingProfileApplication, UnsupportedXmiVersion, parse_xmi

XMI_SUFFIXES = {".xmi", ".uml", ".xml"}


def load_path(path) -> QumModel:
    """Parse a model file by suffix; the result is not yet validated."""
    p = Path(path)
    data = p.read_bytes()
    if p.suffix.lower() in XMI_SUFFIXES:
        return parse_xmi(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise NativeSyntax(1, "UTF-8 text") from None
    return parse_native(text)


__all__ = [
    "MissingProfileApplication",
    "NativeSyntax",
    "UnsupportedXmiVersion",
    "load_path",
    "parse_native",
    "parse_xmi",
]

"""Shared XML helpers for the XMI dialect readers and writers."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape


class XmlSyntax(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def attr_escape(text: str) -> str:
    return escape(text, {'"': "&quot;"})


MODEL_END = re.compile(rb"</(?:\w+:)?Model\s*>")


def parse_bytes(data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else 0
        raise XmlSyntax(line, str(exc)) from None

"""Convex trigonometry and MCP analysis for the sub-Finsler Heisenberg group."""

from .convex_body import (
    Body,
    NormSpec,
    RegularityReport,
    area,
    classify_regularity,
    gauge,
    make_body,
    polar,
    support,
)

__version__ = "0.1.0"

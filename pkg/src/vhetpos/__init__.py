"""Positioning with GPS, HAPS and 5G gNBs in an urban vertical heterogeneous network.

Pseudorange simulation, weighted least-squares single point positioning,
DOP, RAIM fault detection and exclusion, and Monte-Carlo scenario runs.
"""
from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str = "") -> Path:
    """Path of a bundled data file (scenarios, almanac, site lists, trajectory)."""
    return Path(str(resources.files(__package__) / "data")) / name

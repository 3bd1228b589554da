"""reeb-volume: Reeb vector volume minimization for toric Kähler cones."""

__version__ = "1.0.0"

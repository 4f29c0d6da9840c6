"""Thermal-state reconstruction with the quantum equation of motion and SIC-POVM sampling."""

__version__ = "0.1.0"

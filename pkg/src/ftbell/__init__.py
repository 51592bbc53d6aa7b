"""Fault-tolerant distant Bell-pair workbench for the concatenated Steane code."""

__version__ = "0.1.0"

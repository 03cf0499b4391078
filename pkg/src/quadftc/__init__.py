"""Fault-tolerant hover control of a quadcopter with one failed rotor."""

__version__ = "0.1.0"

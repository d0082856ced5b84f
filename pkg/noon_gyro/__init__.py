"""
NOON Gyroscope Toolkit

Simulate one-photon and two-photon (NOON) Sagnac gyroscope runs, fit the fringe
model, and measure how close the rotation-rate precision gets to the standard
quantum limit and the Heisenberg limit.
"""

__version__ = "0.1.0"
__app_name__ = "noon-gyro"

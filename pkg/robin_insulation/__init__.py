"""
Robin Insulation Laboratory
---------------------------
Finite-element laboratory for the optimal boundary insulation of a body
whose first Robin eigenvalue is to be minimized.
"""

__version__ = '0.1.0'

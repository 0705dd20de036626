"""
EQML - quasi-ML reprocessing decoder for short LDPC codes
"""

__version__ = "1.0.0"

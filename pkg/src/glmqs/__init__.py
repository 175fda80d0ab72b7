"""GLMQS - implicit general linear methods with inherent quadratic stability for stiff ODEs."""

__version__ = "0.1.0"
__author__ = "wooto"

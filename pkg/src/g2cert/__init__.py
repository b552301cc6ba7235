"""Exact verification of split g2 vector-field algebras attached to
maximally symmetric (2,3,5)-distributions."""

__version__ = "0.1.0"

"""Verifier and reference interpreter for a minimal C++-like language with
dynamic binding during construction and destruction."""

__version__ = "0.1.0"

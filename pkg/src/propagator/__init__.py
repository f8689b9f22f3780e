"""Ontology-backed search and propagation of visualization designs."""

__version__ = "0.1.0"

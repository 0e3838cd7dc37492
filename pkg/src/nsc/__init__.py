"""Nearest prime simplicial complex classification."""

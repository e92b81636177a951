"""Packaged fixture data files."""

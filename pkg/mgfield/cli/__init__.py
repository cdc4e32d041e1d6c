"""Command-line interface for mgfield."""

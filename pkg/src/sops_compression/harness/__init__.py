"""Command-line drivers, experiment orchestration and rendering."""

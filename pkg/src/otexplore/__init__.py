"""Optimal-transport driven multi-robot exploration."""

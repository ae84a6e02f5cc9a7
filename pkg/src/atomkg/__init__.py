"""Atomic-proposition knowledge-graph toolkit."""

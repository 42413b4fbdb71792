"""Unit tests for the stream-graph engine."""

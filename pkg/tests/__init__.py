"""Tests for the stream-graph engine."""

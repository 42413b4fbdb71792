"""Multi-worker integration tests."""

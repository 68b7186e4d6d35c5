"""Tests for py-signal-injection package."""

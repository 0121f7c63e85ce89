"""Tests for Postmeter."""

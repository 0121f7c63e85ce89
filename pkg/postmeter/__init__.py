"""Postmeter - Post-selected metrology toolkit."""

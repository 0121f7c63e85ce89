"""Postmeter - Post-selected metrology toolkit."""

import sys

from .cli import main

sys.exit(main())

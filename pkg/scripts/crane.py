#!/usr/bin/env python3
"""Run a crane-behavior pipeline command, e.g. ``python -m scripts.crane gen-data``."""
from __future__ import annotations

import sys

from crane_behavior.cli import main

if __name__ == "__main__":
    sys.exit(main())

"""Main entry point for calabiflow package."""

import sys

from calabiflow import main

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

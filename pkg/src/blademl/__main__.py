"""Module entry point: `python -m blademl ...`."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())

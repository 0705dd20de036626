"""
Entry point - run this for the CLI (python main.py simulate --help).
"""

import sys

from eqml.cli import main


if __name__ == "__main__":
    sys.exit(main())

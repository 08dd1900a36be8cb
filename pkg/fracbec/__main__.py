# fracbec/__main__.py
"""
Enables running the package as an executable module.
"""
import sys

from fracbec.infrastructure.cli.command_line_interface import main

if __name__ == "__main__":
    sys.exit(main())

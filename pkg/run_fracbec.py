# run_fracbec.py
"""
Runs the fracbec CLI from a source checkout without installing the package.
"""
import sys

from fracbec.infrastructure.cli.command_line_interface import main

if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python
import sys

from mdr_indent.cli import main

# Convenience entry point for running from a checkout; the installed
# console script is `mdr-indent`.

if __name__ == "__main__":
    sys.exit(main())

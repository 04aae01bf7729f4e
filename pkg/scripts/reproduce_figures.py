#!/usr/bin/env python3
"""Emit the plot-ready figure data (densities, entropy surface, volatility rows)
at the reference resolution N = M = 1000, cap 1e6.

Equivalent to `matchentropy reproduce-figures`; flags pass straight through.
"""

import sys

from matchentropy.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--output") for a in args):
        args += ["--output", "out/figures"]
    sys.exit(main(["reproduce-figures", *args]))

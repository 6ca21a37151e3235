#!/usr/bin/env python3
"""gamma/4, gamma, 4 gamma sweep on the reference config through the CLI."""

import sys
from pathlib import Path

from cmdplab.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    argv = ["sweep", str(ROOT / "configs" / "reference.yaml"), "--param", "gamma",
            "--values", "0.25", "1", "4", "--relative", "--output", "runs/sweep"] + sys.argv[1:]
    sys.exit(main(argv))

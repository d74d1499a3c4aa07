"""Run experiment configs through the solver CLI.

    python scripts/run_sweeps.py                 # every config in scripts/configs
    python scripts/run_sweeps.py ex1_spatial ex5_coupled
"""

import sys
import time
from pathlib import Path

from msexpint.cli import main

CONFIGS = Path(__file__).parent / "configs"


def run(names):
    paths = [CONFIGS / f"{n}.cfg" for n in names] if names else sorted(CONFIGS.glob("*.cfg"))
    worst = 0
    for p in paths:
        t0 = time.perf_counter()
        print(f"== {p.stem}")
        code = main(["sweep", "--config", str(p)])
        print(f"   exit {code} after {time.perf_counter() - t0:.0f}s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))

"""Modulation amplitude and phase over (omega_m, Delta_c) at Omega_c = 64 MHz*2pi, with cuts.

    python scripts/fig3_map.py [OUT_DIR] [JOBS]
"""

import sys

from eitmirror.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig3"
    jobs = sys.argv[2] if len(sys.argv) > 2 else "1"
    sys.exit(main(["--out", out, "--jobs", jobs, "map", "--preset", "fig3", "--svg"]))

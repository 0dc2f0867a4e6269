"""|Gamma_eff| maps over (M, omega_m) and (Omega_p, Omega_c) at Delta_c = -Delta_max.

    python scripts/fig5_maps.py [OUT_DIR] [JOBS]
"""

import sys

from eitmirror.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig5"
    jobs = sys.argv[2] if len(sys.argv) > 2 else "1"
    code = 0
    for preset in ("fig5a", "fig5b"):
        code = code or main(["--out", out, "--jobs", jobs, "map", "--preset", preset, "--svg"])
    sys.exit(code)

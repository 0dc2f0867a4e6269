"""Coupled mirror + medium runs at -Delta_max (damped) and +Delta_max (amplified).

Writes the trace, energy per period and fitted rate for each side, then checks
the 56/64 MHz*2pi parameter set.

    python scripts/fig4_feedback.py [OUT_DIR]
"""

import sys
from pathlib import Path

from eitmirror.cli import main

if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/fig4")
    code = 0
    for name in ("fig4_damped", "fig4_amplified", "swap_56_64"):
        rc = main(["--config", f"configs/{name}.toml", "--out", str(out / name), "coupled"])
        code = code or rc
    sys.exit(code)

"""Fig. 2 parameters: brute-force Im(rho_ge) trace, sideband amplitudes and an eta sweep.

    python scripts/fig2_sidebands.py [OUT_DIR]
"""

import sys

from eitmirror.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/fig2"
    code = main(["--config", "configs/fig2.toml", "--out", out, "steady"])
    code = code or main(["--config", "configs/fig2.toml", "--out", out, "resonance"])
    code = code or main(["--config", "configs/fig2.toml", "--out", out, "sidebands",
                         "--eta-sweep", "0,0.01,0.02,0.04,0.08,0.16"])
    sys.exit(code)

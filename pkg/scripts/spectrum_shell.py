"""Linearised eigenvalues a_k near |k| = N for the two truncation radii R = sqrt(2) L and 2 L.

Prints the gap, its mode, and the relative distance of a_k from a_inf on the
coordinate axes and on the whole sup-norm shell.

    python3 scripts/spectrum_shell.py --N 32
"""

import argparse
import math

import numpy as np

from boltzspec.analysis import eigenvalues
from boltzspec.kernels import KernelSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=32)
    args = ap.parse_args()
    N, L = args.N, math.pi
    for label, R in (("sqrt(2) L", math.sqrt(2) * L), ("2 L", 2 * L)):
        s = eigenvalues(KernelSpec(R=R, L=L), N)
        scale = abs(s.a_inf)
        axis = max(abs(s.at(k) - s.a_inf) for k in [(N, 0), (-N, 0), (0, N), (0, -N)]) / scale
        shell = float(np.max(np.abs(s.shell() - s.a_inf))) / scale
        print(f"R = {label}: a_inf {s.a_inf:.4f}, gap {s.lambda_N:.4f} at {s.argmin}, "
              f"axis deviation {axis:.5f}, shell max deviation {shell:.5f}, "
              f"cross defect {s.cross_defect:.1e}")


if __name__ == "__main__":
    main()

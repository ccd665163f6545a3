"""Momentum and energy production of Q^R for a narrow two-bump datum, as a function of N.

With R = sqrt(2) L the fast truncation reaches relative velocities up to 2L,
so bumps collide with periodic copies of each other and the production does
not shrink with N. Shrinking R below the dealiasing bound (allow_aliasing)
removes those collisions and the spectral trend appears.

    python3 scripts/conservation_trend.py [--steps 0]
"""

import argparse
import math
import warnings

import numpy as np

from boltzspec.collision import CollisionOperator
from boltzspec.diagnostics import velocity_moments
from boltzspec.dynamics import Bump, InitialSpec, RunSettings, SupportWarning, build_initial, run
from boltzspec.kernels import DealiasingWarning, KernelSpec
from boltzspec.spectral_core import TorusGrid

L = math.pi
DATUM = InitialSpec((Bump(1.0, (-0.5, 0.1), 0.02), Bump(0.6, (0.5, -0.1), 0.02)), 1.0)


def production(spec, N, M):
    f = build_initial(DATUM, TorusGrid(2, N, L), warn=False)
    q = CollisionOperator.fast(spec, N, M).full(f)
    _, p, e = velocity_moments(q)
    return float(np.linalg.norm(p)), abs(e)


def drift(spec, N, M, steps, dt):
    f = build_initial(DATUM, TorusGrid(2, N, L), warn=False)
    res = run(CollisionOperator.fast(spec, N, M), f, RunSettings(t_end=steps * dt, dt=dt,
                                                                   cadence=steps))
    (_, p0, e0), (_, p1, e1) = velocity_moments(f), velocity_moments(res.final.field)
    return float(np.linalg.norm(p1 - p0)), abs(e1 - e0) / e0


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--Ns", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--M", type=int, default=64)
    ap.add_argument("--steps", type=int, default=0, help="also run this many RK4 steps")
    ap.add_argument("--dt", type=float, default=5e-4)
    args = ap.parse_args()
    warnings.simplefilter("ignore", DealiasingWarning)
    warnings.simplefilter("ignore", SupportWarning)
    for label, R in (("R = sqrt(2) L", math.sqrt(2) * L), ("R = 0.6 L", 0.6 * L)):
        spec = KernelSpec(R=R, L=L, allow_aliasing=True)
        print(label)
        print(f"  {'N':>4} {'|int v Q|':>12} {'|int |v|^2 Q|':>14}"
              + (f" {'mom drift':>12} {'energy drift':>13}" if args.steps else ""))
        for N in args.Ns:
            p, e = production(spec, N, args.M)
            line = f"  {N:4d} {p:12.3e} {e:14.3e}"
            if args.steps:
                dp, de = drift(spec, N, args.M, args.steps, args.dt)
                line += f" {dp:12.3e} {de:13.3e}"
            print(line)


if __name__ == "__main__":
    main()

"""Track the default synthetic gait and look at where the error goes.

Run: python demos/walk_tracking.py [--svg walk.svg]
"""

import argparse

import numpy as np

from seajoint import SimConfig, run_simulation
from seajoint.simulator import plot_trace_svg


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--svg", help="write a plot of phi_d, phi and e1 here")
    args = parser.parse_args()

    result = run_simulation(SimConfig()).raise_for_status()
    tr = result.trace
    print(f"8 s of walking (5 gait cycles) integrated in {result.wall_time:.2f} s")
    for name, value in result.metrics.as_dict().items():
        print(f"  {name:30s} {value:.3g}")

    # The error is largest where the gait reverses direction, i.e. where phi_d_ddot peaks.
    worst = int(np.argmax(np.abs(tr.e1) * (tr.t > 0.5)))
    print(f"worst tracking error {tr.e1[worst]:+.2e} rad at t = {tr.t[worst]:.3f} s (phi_d = {tr.phi_d[worst]:+.3f})")

    # The spring force follows gravity plus the inertial demand of the gait.
    print(f"peak SEA torque {np.max(np.abs(tr.tau_SEA)):.3f} N*m, peak deflection {np.max(np.abs(tr.delta)) * 1e3:.3f} mm")

    if args.svg:
        plot_trace_svg(args.svg, tr)
        print(f"wrote {args.svg}")


if __name__ == "__main__":
    main()

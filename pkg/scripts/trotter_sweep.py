"""Infidelity of the digital (JC plus anti-JC) simulation against step count."""

import argparse
import math

from uscsim.dynamics import loglog_slope, trotter_sweep
from uscsim.models import RabiModel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--coupling", type=float, default=0.8)
    parser.add_argument("--steps", type=int, nargs="+", default=[8, 16, 32, 64, 128, 256])
    parser.add_argument("--nmax", type=int, default=30)
    parser.add_argument("--qubit-share", type=float, default=0.5)
    args = parser.parse_args()

    results = trotter_sweep(RabiModel(1.0, 1.0, args.coupling), 2 * math.pi, args.steps,
                            nmax=args.nmax, qubit_share=args.qubit_share)
    print("n,infidelity,local_slope")
    prev = None
    for n, r in zip(args.steps, results):
        local = "" if prev is None else f"{loglog_slope([prev[0], n], [prev[1], r.infidelity]):.3f}"
        print(f"{n},{r.infidelity:.6e},{local}")
        prev = (n, r.infidelity)
    print(f"# overall slope {loglog_slope(args.steps, [r.infidelity for r in results]):.3f}")


if __name__ == "__main__":
    main()

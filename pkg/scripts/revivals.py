"""Collapse and revival of the bare vacuum in the deep-strong regime.

Prints the revival maxima, one per mode period, for a few qubit splittings.
"""

import argparse
import math

from uscsim.dynamics import TimeGrid, revival_maxima, revival_probability
from uscsim.models import RabiModel


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--coupling", type=float, default=2.0)
    parser.add_argument("--periods", type=int, default=6)
    parser.add_argument("--nmax", type=int, default=100)
    parser.add_argument("--qubit", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0])
    args = parser.parse_args()

    period = 2 * math.pi
    grid = TimeGrid(0.0, args.periods * period, 400 * args.periods)
    print("qubit_freq," + ",".join(f"max_{k + 1}" for k in range(args.periods)))
    for qubit in args.qubit:
        times, prob = revival_probability(RabiModel(qubit, 1.0, args.coupling), grid, nmax=args.nmax)
        peaks = revival_maxima(times, prob, period)
        print(f"{qubit:g}," + ",".join(f"{p:.6f}" for p in peaks))


if __name__ == "__main__":
    main()

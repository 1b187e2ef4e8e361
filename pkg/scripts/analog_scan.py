"""Minimum fidelity of the driven-JC analog simulation as the carrier amplitude grows.

The probe frequency is kept on the resonance that the effective Rabi model needs.
"""

import argparse

from uscsim.dynamics import analog_compare
from uscsim.models import DrivenJC


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--carrier", type=float, nargs="+", default=[5.0, 10.0, 20.0, 40.0])
    parser.add_argument("--nmax", type=int, default=25)
    parser.add_argument("--samples", type=int, default=50)
    args = parser.parse_args()

    mode, coupling, carrier_freq, probe_amp = 20.0, 1.0, 19.5, 0.5
    print("carrier_amp,min_fidelity")
    for amp in args.carrier:
        spec = DrivenJC(mode, mode, coupling, amp, carrier_freq, probe_amp, carrier_freq - 2 * amp)
        res = analog_compare(spec, nmax=args.nmax, n_samples=args.samples)
        print(f"{amp:g},{res.min_fidelity:.6f}")


if __name__ == "__main__":
    main()

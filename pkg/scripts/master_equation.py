"""Steady-state photon excess from bare-operator damping versus the dressed treatment."""

import argparse

import numpy as np

from uscsim.hilbert import make_number
from uscsim.models import RabiModel
from uscsim.open_systems import (
    LindbladSpec,
    dressed_liouvillian,
    dressed_rates,
    from_eigenbasis,
    standard_liouvillian,
    steady_state,
)
from uscsim.spectra import eigensystem


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--couplings", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.6, 0.8])
    parser.add_argument("--nmax", type=int, default=15)
    parser.add_argument("--levels", type=int, default=12)
    args = parser.parse_args()

    lindblad = LindbladSpec(0.05, 0.02, 0.01)
    print("coupling,ground_photons,standard_excess,dressed_excess")
    for g in args.couplings:
        spec = RabiModel(1.0, 1.0, g)
        layout = spec.default_layout(args.nmax)
        h = spec.hamiltonian(layout)
        es = eigensystem(h)
        n_op = make_number(layout, 1).matrix
        ground = float(np.real(es.ground_state.conj() @ n_op @ es.ground_state))
        standard = steady_state(standard_liouvillian(h, lindblad))
        low = es.truncated(args.levels)
        dressed = from_eigenbasis(low, steady_state(dressed_liouvillian(low, dressed_rates(low, lindblad))))
        excess = [float(np.real(np.trace(n_op @ rho))) - ground for rho in (standard, dressed)]
        print(f"{g:g},{ground:.6f},{excess[0]:.6e},{excess[1]:.6e}")


if __name__ == "__main__":
    main()

"""Two-site, one-cavity check: trajectories vs density matrix vs rate equation.

Prints the excited-state population from the three solvers on a time grid.

    python scripts/toy_oracles.py --n-traj 40000 --t-final 240
"""
import argparse

import numpy as np

from fcistab.lindblad import Observer, build_composite, direct_lindblad, lattice_reduced, run_trajectories, two_site_toy
from fcistab.rates import evolve_on_grid, rate_matrix
from fcistab.spectra import transition_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-traj", type=int, default=40000)
    ap.add_argument("--t-final", type=float, default=240.0)
    ap.add_argument("--n-max", type=int, default=3)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    H, basis, spec, cav = two_site_toy()
    ham = build_composite(H, basis, [cav], args.n_max)
    psi0 = np.kron(spec.vectors[:, 1], np.eye(args.n_max + 1)[0]).astype(complex)
    n = 24
    times = np.linspace(0, args.t_final, n + 1)
    rhos = direct_lindblad(ham, psi0, times)
    dm = [np.real(spec.vectors[:, 1].conj() @ lattice_reduced(r, ham.space) @ spec.vectors[:, 1]) for r in rhos]
    rates = evolve_on_grid(rate_matrix(spec, transition_table(spec, basis, [0]), [cav]), [0, 1], times)[:, 1]
    ens = run_trajectories(ham, lambda rng: psi0.copy(), args.t_final, args.n_traj, args.seed,
                           Observer(ham.space, spectrum=spec, cavity_sites=(0,)), n_steps=n)
    traj, err = ens.mean["populations"][:, 1], ens.stderr["populations"][:, 1]
    print("     t   density-matrix   rates    trajectories")
    for row in zip(times, dm, rates, traj, err):
        print("{:6.1f}   {:.4f}          {:.4f}   {:.4f} +- {:.4f}".format(*row))


if __name__ == "__main__":
    main()

"""Build the bound-state matrix representation and inspect it."""

import numpy as np

from so42hydrogen import build_rep, check_commutators, casimir_check


def main():
    for n_max in (4, 6):
        rep = build_rep(n_max)
        print(f"n_max={n_max}: dim {rep.dim}")

    rep = build_rep(4)
    H = rep.hamiltonian
    energies = np.unique(np.round(np.diag(H).real, 12))
    print(f"\nshell energies: {energies}")
    w12 = energies[1] - energies[0]
    w23 = energies[2] - energies[1]
    print(f"transition frequencies: 1-2 {w12:.4f}  2-3 {w23:.4f}"
          f"  3-4 {energies[3] - energies[2]:.4f}")

    # dipole-like elements out of the ground state
    i1s = rep.index[(1, 0, 0)]
    i2p = rep.index[(2, 1, 0)]
    for name in ("B3", "G3", "C", "S"):
        M = rep.generator(name)
        print(f"<2p0| {name} |1s> = {M[i2p, i1s]:.4f}")

    # the same operators leak upward too; that is what the boundary
    # shells of a truncation have to absorb
    i3s = rep.index[(3, 0, 0)]
    i3d = rep.index[(3, 2, 0)]
    B3 = rep.generator("B3")
    print(f"<3s | B3 |2p0> = {B3[i3s, i2p]:.4f}")
    print(f"<3d0| B3 |2p0> = {B3[i3d, i2p]:.4f}")

    comm = check_commutators(rep)
    print(f"\ncommutator residual on the interior"
          f" (boundary rows masked): {comm.max_residual:.2e}"
          f"  worst {comm.worst}")

    cas = casimir_check(rep)
    print(f"Casimir identities: L.A residual {cas['LA_residual']:.2e},"
          f" quadratic residual {cas['quadratic_residual']:.2e}")


if __name__ == "__main__":
    main()

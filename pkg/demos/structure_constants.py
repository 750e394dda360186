"""Walk through the 15-generator commutator table and its closure checks."""

import numpy as np

from so42hydrogen import algebra
from so42hydrogen.generators import NAMES


def main():
    report = algebra.verify_table()
    print("bracket table verification")
    for key in sorted(report):
        print(f"  {key}: {report[key]}")

    # a few familiar brackets, printed as coefficient vectors
    print("\nselected brackets [X_a, X_b] = i sum_c f_abc X_c")
    for a, b in [("L1", "L2"), ("A1", "A2"), ("B1", "B2"), ("S", "C"),
                 ("D", "S"), ("L3", "A3")]:
        out = algebra.bracket(algebra.basis_element(NAMES.index(a)),
                              algebra.basis_element(NAMES.index(b)))
        terms = [f"{float(c):+g} {NAMES[k]}" for k, c in enumerate(out)
                 if abs(c) > 1e-12]
        print(f"  [{a}, {b}] = i ({'  '.join(terms) if terms else '0'})")

    kf = np.array(algebra.killing_form(), dtype=float)
    evals = np.linalg.eigvalsh(kf)
    print(f"\nKilling form: rank {np.sum(np.abs(evals) > 1e-9)},"
          f" signature ({np.sum(evals > 1e-9)}+, {np.sum(evals < -1e-9)}-)")
    print(f"nondegenerate: {algebra.killing_nondegeneracy()}")

    # the five-generator set closes on the whole algebra
    sub = algebra.generated_subalgebra_names(["L1", "L2", "A3", "S", "C"])
    print(f"\n<L1, L2, A3, S, C> closes at dim {sub.dim} (depth {sub.depth})")

    # compact subalgebra for contrast
    sub = algebra.generated_subalgebra_names(["L1", "L2"])
    print(f"<L1, L2> closes at dim {sub.dim} (rotations only)")

    sub = algebra.generated_subalgebra_names(["L1", "L2", "A1"])
    print(f"<L1, L2, A1> closes at dim {sub.dim} (the so(4) block)")


if __name__ == "__main__":
    main()

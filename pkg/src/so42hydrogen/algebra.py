"""Exact arithmetic over the abstract 15-dimensional so(4,2) Lie algebra.

Works in the real skew-Hermitian basis, where every structure constant
is 0 or +-1:

    [X_a, X_b] = sum_c f_abc X_c

Vector relations are expanded componentwise at construction time
(epsilon patterns for the angular blocks, delta patterns for the
cross-family products), giving one fully explicit 15x15x15 table.
The table and all Jacobi checks use exact rational arithmetic;
floating point enters only in the float-seeded closure path.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .generators import (
    A_IDX,
    B_IDX,
    C_IDX,
    D_IDX,
    G_IDX,
    INDEX,
    L_IDX,
    METRIC_SIGNATURE,
    NAMES,
    N_GENERATORS,
    S_IDX,
    parse_generator,
)

Vector = Sequence  # length-15 coefficient vector, Fraction or float entries


def _eps(i: int, j: int, k: int) -> int:
    # Levi-Civita on {0,1,2}, as an integer
    return ((i - j) * (j - k) * (k - i)) // 2


@lru_cache(maxsize=1)
def structure_constants() -> tuple:
    """The 15x15x15 table f with [X_a, X_b] = sum_c f[a][b][c] X_c.

    Entries are exact integers (0, +1, -1).  Returned as nested tuples
    so the cached value is immutable.
    """
    f = [[[0] * N_GENERATORS for _ in range(N_GENERATORS)]
         for _ in range(N_GENERATORS)]

    def add(a, b, c, v):
        if v:
            f[a][b][c] += v
            f[b][a][c] -= v

    def add_eps(X, Y, Z, s):
        same = X is Y
        for i in range(3):
            for j in range(3):
                if same and j <= i:
                    continue  # visit each unordered same-family pair once
                for k in range(3):
                    e = _eps(i, j, k)
                    if e:
                        add(X[i], Y[j], Z[k], s * e)

    def add_delta(X, Y, z, s):
        for i in range(3):
            add(X[i], Y[i], z, s)

    def add_compwise(x, Y, Z, s):
        for i in range(3):
            add(x, Y[i], Z[i], s)

    add_eps(L_IDX, L_IDX, L_IDX, +1)
    add_eps(L_IDX, A_IDX, A_IDX, +1)
    add_eps(L_IDX, B_IDX, B_IDX, +1)
    add_eps(L_IDX, G_IDX, G_IDX, +1)
    add_eps(A_IDX, A_IDX, L_IDX, +1)
    add_eps(B_IDX, B_IDX, L_IDX, -1)
    add_eps(G_IDX, G_IDX, L_IDX, -1)

    add_delta(A_IDX, B_IDX, S_IDX, +1)
    add_delta(G_IDX, A_IDX, C_IDX, -1)
    add_delta(G_IDX, B_IDX, D_IDX, -1)

    add_compwise(S_IDX, A_IDX, B_IDX, +1)
    add_compwise(S_IDX, B_IDX, A_IDX, +1)
    add_compwise(C_IDX, A_IDX, G_IDX, +1)
    add_compwise(D_IDX, B_IDX, G_IDX, -1)
    add_compwise(C_IDX, G_IDX, A_IDX, +1)
    add_compwise(D_IDX, G_IDX, B_IDX, +1)

    add(C_IDX, S_IDX, D_IDX, -1)
    add(S_IDX, D_IDX, C_IDX, +1)
    add(D_IDX, C_IDX, S_IDX, +1)

    return tuple(tuple(tuple(row) for row in plane) for plane in f)


@lru_cache(maxsize=1)
def structure_constants_array() -> np.ndarray:
    """Float64 copy of the table for vectorized numerical work."""
    arr = np.array(structure_constants(), dtype=float)
    arr.setflags(write=False)
    return arr


def basis_element(i) -> list:
    """Unit coefficient vector for generator i (index or name)."""
    if isinstance(i, str):
        i = parse_generator(i)
    v = [Fraction(0)] * N_GENERATORS
    v[i] = Fraction(1)
    return v


def bracket(a: Vector, b: Vector) -> list:
    """Lie bracket of two coefficient vectors over the fixed basis.

    Bilinear and antisymmetric; exact when the inputs are exact.
    """
    f = structure_constants()
    out = [a[0] * 0] * N_GENERATORS  # zero of the input arithmetic type
    for i in range(N_GENERATORS):
        ai = a[i]
        if not ai:
            continue
        for j in range(N_GENERATORS):
            bj = b[j]
            if not bj:
                continue
            row = f[i][j]
            p = ai * bj
            for c in range(N_GENERATORS):
                if row[c]:
                    out[c] = out[c] + p * row[c]
    return out


def jacobi_defect(a, b, c) -> list:
    """[a,[b,c]] + [b,[c,a]] + [c,[a,b]].

    Arguments are generator ids or coefficient vectors; must be the
    zero vector for every input, computed exactly on exact inputs.
    """

    def vec(x):
        if isinstance(x, (list, tuple, np.ndarray)):
            return list(x)
        return basis_element(x)

    ea, eb, ec = vec(a), vec(b), vec(c)
    t1 = bracket(ea, bracket(eb, ec))
    t2 = bracket(eb, bracket(ec, ea))
    t3 = bracket(ec, bracket(ea, eb))
    return [x + y + z for x, y, z in zip(t1, t2, t3)]


def verify_table() -> dict:
    """Exhaustive exact check of antisymmetry and all 455 Jacobi triples.

    Returns a summary dict; raises nothing, look at the 'ok' flag.
    """
    f = structure_constants()
    anti_bad = sum(
        1
        for a in range(N_GENERATORS)
        for b in range(N_GENERATORS)
        for c in range(N_GENERATORS)
        if f[a][b][c] != -f[b][a][c]
    )
    jacobi_bad = 0
    triples = 0
    for a, b, c in itertools.combinations(range(N_GENERATORS), 3):
        triples += 1
        if any(jacobi_defect(a, b, c)):
            jacobi_bad += 1
    nonzero_pairs = sum(
        1
        for a in range(N_GENERATORS)
        for b in range(a + 1, N_GENERATORS)
        if any(f[a][b])
    )
    return {
        "antisymmetry_violations": anti_bad,
        "jacobi_triples_checked": triples,
        "jacobi_violations": jacobi_bad,
        "nonzero_unordered_brackets": nonzero_pairs,
        "ok": anti_bad == 0 and jacobi_bad == 0,
    }


# ---------------------------------------------------------------------------
# subalgebra closure


class Subalgebra(NamedTuple):
    basis: list          # list of length-15 coefficient vectors
    dim: int
    depth: int           # bracket depth at which the span stabilized
    closed: bool         # False only if the depth cap was hit while growing


def _reduce_exact(rows: list, vec: list):
    """Reduce vec against RREF-ish pivot rows; return remainder or None."""
    v = [Fraction(x) for x in vec]
    for piv, row in rows:
        if v[piv]:
            coef = v[piv] / row[piv]
            v = [x - coef * y for x, y in zip(v, row)]
    for piv in range(len(v)):
        if v[piv]:
            return piv, v
    return None


def _span_insert_exact(rows: list, vec: list) -> bool:
    red = _reduce_exact(rows, vec)
    if red is None:
        return False
    rows.append(red)
    return True


def generated_subalgebra(
    seeds: Iterable[Vector],
    tol: float = 1e-10,
    max_depth: int = 10,
) -> Subalgebra:
    """Smallest bracket-closed subspace containing the seeds.

    Exact path when every seed entry is an int or Fraction: span rank
    decided by exact elimination.  Float seeds fall back to singular
    values, where a direction counts as new if its residual against the
    current span exceeds tol times its norm.

    Depth 0 is the seed span itself; each round brackets the current
    basis against itself.  Iteration caps at max_depth and reports
    closed=False rather than looping.
    """
    seeds = [list(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed element")
    exact = all(
        isinstance(x, (int, Fraction)) for s in seeds for x in s
    )

    if exact:
        rows: list = []
        basis: list = []
        for s in seeds:
            sv = [Fraction(x) for x in s]
            if _span_insert_exact(rows, sv):
                basis.append(sv)
        depth = 0
        for depth_try in range(1, max_depth + 1):
            grew = False
            current = list(basis)
            for x, y in itertools.combinations(current, 2):
                z = bracket(x, y)
                if any(z) and _span_insert_exact(rows, z):
                    basis.append(z)
                    grew = True
            if not grew:
                return Subalgebra(basis, len(basis), depth, True)
            depth = depth_try
        # one more sweep to see whether the last round already closed it
        grew = any(
            _reduce_exact(rows, bracket(x, y)) is not None
            for x, y in itertools.combinations(list(basis), 2)
        )
        return Subalgebra(basis, len(basis), depth, not grew)

    # float path: orthonormal span maintained by SVD
    mat = np.array([np.asarray(s, dtype=float) for s in seeds])
    norms = np.linalg.norm(mat, axis=1)
    mat = mat[norms > 0]

    def orth(m):
        u, sv, vt = np.linalg.svd(m, full_matrices=False)
        keep = sv > tol * sv[0]
        return vt[keep]

    span = orth(mat)
    depth = 0
    for depth_try in range(1, max_depth + 1):
        cand = list(span)
        grew = False
        for i, j in itertools.combinations(range(len(span)), 2):
            z = np.array(bracket(span[i], span[j]), dtype=float)
            r = z - span.T @ (span @ z)
            zn = np.linalg.norm(z)
            if zn > 0 and np.linalg.norm(r) > tol * max(zn, 1.0):
                cand.append(z)
                grew = True
        if not grew:
            return Subalgebra([list(v) for v in span], len(span), depth, True)
        span = orth(np.array(cand))
        depth = depth_try
    return Subalgebra([list(v) for v in span], len(span), depth, False)


def generated_subalgebra_names(names: Iterable[str], **kw) -> Subalgebra:
    """Closure seeded by named generators (exact path)."""
    return generated_subalgebra([basis_element(n) for n in names], **kw)


# ---------------------------------------------------------------------------
# Killing form


@lru_cache(maxsize=1)
def killing_form() -> tuple:
    """K_ab = trace(ad X_a . ad X_b), exact integers from the table."""
    f = structure_constants()
    K = [[0] * N_GENERATORS for _ in range(N_GENERATORS)]
    for a in range(N_GENERATORS):
        for b in range(N_GENERATORS):
            s = 0
            for c in range(N_GENERATORS):
                for d in range(N_GENERATORS):
                    s += f[a][c][d] * f[b][d][c]
            K[a][b] = s
    return tuple(tuple(row) for row in K)


def _rank_exact(M: Sequence[Sequence]) -> int:
    rows: list = []
    r = 0
    for row in M:
        if _span_insert_exact(rows, [Fraction(x) for x in row]):
            r += 1
    return r


def killing_nondegeneracy() -> bool:
    """True iff the Killing form has full rank 15 (semisimplicity check)."""
    return _rank_exact(killing_form()) == N_GENERATORS


def killing_restriction_rank(indices: Sequence[int]) -> int:
    """Exact rank of the Killing form restricted to a subset of generators."""
    K = killing_form()
    sub = [[K[a][b] for b in indices] for a in indices]
    return _rank_exact(sub)


# ---------------------------------------------------------------------------
# export


def export_structure_constants(path) -> dict:
    """Write the nonzero table entries as a JSON document.

    One record per ordered pair a < b; the a > b half follows by
    antisymmetry.  Returns the document that was written.
    """
    f = structure_constants()
    entries = []
    for a in range(N_GENERATORS):
        for b in range(a + 1, N_GENERATORS):
            for c in range(N_GENERATORS):
                if f[a][b][c]:
                    entries.append(
                        {"a": NAMES[a], "b": NAMES[b], "c": NAMES[c],
                         "coefficient": int(f[a][b][c])}
                    )
    doc = {
        "schema_version": 1,
        "basis": list(NAMES),
        "metric_signature": list(METRIC_SIGNATURE),
        "convention": "skew-Hermitian basis, [X_a,X_b] = sum_c f_abc X_c",
        "antisymmetric_completion": True,
        "entries": entries,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return doc


REMARK_FIVE_SET = ("L1", "L2", "A3", "S", "C")
"""Five-generator set whose bracket closure recovers the full algebra."""

"""Finite truncations of the bound-state matrix representation.

Basis states |nlm> with n <= n_max, ordered lexicographically by
(n, l, m); dimension n_max(n_max+1)(2n_max+1)/6.  The printed ladder
coefficients (alpha, c, u, v) fix the third Cartesian components and
the radial structure; the remaining coefficient tables (omega_rot,
beta, gamma, omega_rad) are not given in closed form anywhere and are
derived here by constraint solving, then validated against the
commutation table on the truncation interior.

Truncation policy: matrix elements targeting n > n_max are dropped.
Single brackets move n by at most 2, so all correctness claims are
restricted to the interior projector n <= n_max - 2.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .algebra import structure_constants
from .errors import ConstraintError, SymmetryError
from .generators import NAMES, N_GENERATORS, parse_generator


class BasisState(NamedTuple):
    n: int
    l: int
    m: int


def build_basis(n_max: int):
    """Ordered basis and its index map for cutoff n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    states = [
        BasisState(n, l, m)
        for n in range(1, n_max + 1)
        for l in range(n)
        for m in range(-l, l + 1)
    ]
    index = {s: i for i, s in enumerate(states)}
    return states, index


def basis_dimension(n_max: int) -> int:
    return n_max * (n_max + 1) * (2 * n_max + 1) // 6


def energy(n: int) -> float:
    """Bound-state energy -1/(2 n^2) in atomic units."""
    return -0.5 / (n * n)


# ---------------------------------------------------------------------------
# coefficient closed forms


def ladder_coefficient(kind: str, n: int | None = None, l: int | None = None,
                       m: int | None = None) -> float:
    """Evaluate one of the matrix-element coefficient closed forms.

    kind is one of "alpha", "c", "u", "v".  Raises IndexError outside
    the valid index ranges (alpha needs |m| <= l; the radial three
    need 1 <= l <= n - 1 resp. n for v's upper state).
    """
    if kind == "alpha":
        if l is None or m is None or abs(m) > l:
            raise IndexError(f"alpha needs |m| <= l, got l={l} m={m}")
        return math.sqrt((l - m) * (l + m))
    if kind in ("c", "u", "v"):
        if n is None or l is None or l < 1 or l > n:
            raise IndexError(f"{kind} needs 1 <= l <= n, got n={n} l={l}")
        den = (2 * l - 1) * (2 * l + 1)
        if kind == "c":
            if l > n - 1:
                raise IndexError(f"c needs l <= n - 1, got n={n} l={l}")
            return math.sqrt((n - l) * (n + l) / den)
        if kind == "u":
            return 0.5 * math.sqrt((n + l - 1) * (n + l) / den)
        return 0.5 * math.sqrt((n - l) * (n - l + 1) / den)
    raise KeyError(f"unknown coefficient kind {kind!r}")


def _alpha(l, m):
    return math.sqrt((l - m) * (l + m))


def _c(n, l):
    return math.sqrt((n - l) * (n + l) / ((2 * l - 1) * (2 * l + 1)))


def _u(n, l):
    return 0.5 * math.sqrt((n + l - 1) * (n + l) / ((2 * l - 1) * (2 * l + 1)))


def _v(n, l):
    return 0.5 * math.sqrt((n - l) * (n - l + 1) / ((2 * l - 1) * (2 * l + 1)))


# closed forms matching the derived tables; the derivation in
# derive_ladder_coefficients is the authority, these are conveniences
# validated against it by the test suite.

def omega_rot(l, m):
    """L+ coefficient: L+|nlm> = omega_rot(l, m)|n,l,m+1>."""
    return math.sqrt((l - m) * (l + m + 1))


def beta_mix(l, m):
    """l-lowering raising-ladder coefficient (A+, B+, G+ into l-1)."""
    return math.sqrt((l - m) * (l - m + 1))


def gamma_mix(l, m):
    """l-raising raising-ladder coefficient (A+, B+, G+ into l+1)."""
    return math.sqrt((l + m) * (l + m + 1))


def omega_rad(n, l):
    """T+ coefficient: T+|nlm> = omega_rad(n, l)|n+1,l,m>."""
    return math.sqrt((n - l) * (n + l + 1))


# ---------------------------------------------------------------------------
# derived coefficient tables


@dataclass
class CoefficientTables:
    """Ladder coefficients for one n_max, solved from the algebra.

    rot[(l, m)]       L+ coefficients
    beta[(l, m)]      mixed-ladder coefficient into lower l
    gamma[(l, m)]     mixed-ladder coefficient into higher l
    rad[(n, l)]       T+ coefficients
    residual          worst constraint violation across all solves
    index_negation_rot/rad   data-discovered symmetry flags (see notes)
    """
    n_max: int
    rot: dict
    beta: dict
    gamma: dict
    rad: dict
    residual: float
    index_negation_rot: bool
    index_negation_rad: bool
    convention: str = "all ladder coefficients real and >= 0"


def _solve_rot(n_max):
    """omega_rot from [L+, L-] = 2 L3 with top-state termination.

    Squared coefficients P_m satisfy P_{m-1} - P_m = 2m and P_l = 0;
    solved per l by downward accumulation.
    """
    rot = {}
    for l in range(n_max):
        P = 0.0
        rot[(l, l)] = 0.0
        for m in range(l, -l, -1):
            P = P + 2 * m  # now P = P_{m-1}
            rot[(l, m - 1)] = math.sqrt(P)
    return rot


def _solve_rad(n_max):
    """omega_rad from [T+, T-] = -2 D with bottom-state termination.

    Squared coefficients Q_n satisfy Q_n - Q_{n-1} = 2n and Q_l = 0.
    """
    rad = {}
    for l in range(n_max):
        Q = 0.0
        rad[(l, l)] = 0.0
        for n in range(l + 1, n_max + 1):
            Q = Q + 2 * n
            rad[(n, l)] = math.sqrt(Q)
    return rad


def _quadratic_fit(xs, ys):
    # least-squares quadratic through solved table points
    return np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 2)


def derive_ladder_coefficients(n_max: int, tol: float = 1e-10) -> CoefficientTables:
    """Solve for the coefficient tables the printed formulas leave out.

    Three constraint systems, solved independently and then validated
    (not assumed) by matrix residuals on the truncation interior:

      (a) omega_rot from the angular su(2) relations per l;
      (b) beta and gamma extracted from the commutator [A3, L+], which
          must reproduce the raising component A+ of the Runge-Lenz
          vector, with the printed c table factored out;
      (c) omega_rad from the radial su(1,1) relations per (l, m) chain.

    All coefficients are fixed real and nonnegative; with that phase
    convention the solution is unique.  Raises ConstraintError if any
    residual exceeds tol.
    """
    if n_max < 3:
        raise ValueError("n_max must be >= 3 so the truncation has an interior")
    rot = _solve_rot(n_max)
    rad = _solve_rad(n_max)

    states, index = build_basis(n_max)
    dim = len(states)

    def mat():
        return np.zeros((dim, dim), dtype=complex)

    # L3, L+, A3 from solved/printed pieces
    L3 = mat()
    Lp = mat()
    A3 = mat()
    for (n, l, m) in states:
        i = index[(n, l, m)]
        L3[i, i] = m
        if (n, l, m + 1) in index:
            Lp[index[(n, l, m + 1)], i] = rot[(l, m)]
        if l - 1 >= abs(m):
            A3[index[(n, l - 1, m)], i] = _alpha(l, m) * _c(n, l)
        if l + 1 <= n - 1 and abs(m) <= l + 1:
            A3[index[(n, l + 1, m)], i] = _alpha(l + 1, m) * _c(n, l + 1)

    # (a) validate the su(2) block relations
    Lm = Lp.conj().T
    res_a = max(
        float(np.abs(L3 @ Lp - Lp @ L3 - Lp).max()),
        float(np.abs(Lp @ Lm - Lm @ Lp - 2 * L3).max()),
    )

    # (b) extract beta and gamma from M = [A3, L+]
    M = A3 @ Lp - Lp @ A3
    beta = {}
    gamma = {}
    res_b = 0.0
    for (n, l, m) in states:
        i = index[(n, l, m)]
        lo = (n, l - 1, m + 1)
        if lo in index and l >= 1:
            val = M[index[lo], i].real / _c(n, l)
            key = (l - 1, m)
            if key in beta:
                res_b = max(res_b, abs(beta[key] - val))
            else:
                beta[key] = val
        hi = (n, l + 1, m + 1)
        if hi in index and l + 1 <= n - 1:
            val = -M[index[hi], i].real / _c(n, l + 1)
            key = (l + 1, m)
            if key in gamma:
                res_b = max(res_b, abs(gamma[key] - val))
            else:
                gamma[key] = val
    if any(v < -tol for v in beta.values()) or any(v < -tol for v in gamma.values()):
        raise ConstraintError("extracted ladder coefficients violate the "
                              "nonnegative phase convention")
    beta = {k: max(v, 0.0) for k, v in beta.items()}
    gamma = {k: max(v, 0.0) for k, v in gamma.items()}

    # validate (b): rebuild A+ from the tables and check the so(4)
    # relations [A+, A3] ~ L+ and [A3, [A3, L+]] consistency on the
    # interior; the full table check lives in check_commutators.
    Ap = mat()
    for (n, l, m) in states:
        i = index[(n, l, m)]
        lo = (n, l - 1, m + 1)
        if lo in index and l >= 1 and (l - 1, m) in beta:
            Ap[index[lo], i] += beta[(l - 1, m)] * _c(n, l)
        hi = (n, l + 1, m + 1)
        if hi in index and l + 1 <= n - 1 and (l + 1, m) in gamma:
            Ap[index[hi], i] += -gamma[(l + 1, m)] * _c(n, l + 1)
    Am = Ap.conj().T
    A1 = (Ap + Am) / 2
    A2 = (Ap - Am) / (2j)
    # [A1, A2] = i L3 and [A2, A3] = i L1 hold exactly on all of the
    # truncation for fixed n (A is block-diagonal in n)
    L1 = (Lp + Lm) / 2
    res_b = max(res_b, float(np.abs(A1 @ A2 - A2 @ A1 - 1j * L3).max()))
    res_b = max(res_b, float(np.abs(A2 @ A3 - A3 @ A2 - 1j * L1).max()))

    # (c) validate the radial su(1,1) relations chainwise
    Tp = mat()
    Dg = mat()
    for (n, l, m) in states:
        i = index[(n, l, m)]
        Dg[i, i] = n
        if (n + 1, l, m) in index:
            Tp[index[(n + 1, l, m)], i] = rad[(n, l)]
    Tm = Tp.conj().T
    interior = np.diag([1.0 if n <= n_max - 1 else 0.0 for (n, l, m) in states])
    comm = Tp @ Tm - Tm @ Tp
    res_c = float(np.abs((comm + 2 * Dg) @ interior).max())
    res_c = max(res_c, float(np.abs(Dg @ Tp - Tp @ Dg - Tp).max()))

    residual = max(res_a, res_b, res_c)
    if residual > tol:
        raise ConstraintError(
            f"coefficient constraint residual {residual:.3e} exceeds {tol:.1e}"
        )

    # data-level discovery of the index-negation symmetries: fit the
    # squared tables by quadratics and compare at negated indices
    neg_rot = True
    for l in range(1, n_max):
        ms = list(range(-l, l + 1))
        coeffs = _quadratic_fit(ms, [rot[(l, m)] ** 2 for m in ms])
        for m in range(-l, l):
            lhs = rot[(l, m)] ** 2
            rhs = float(np.polyval(coeffs, -m - 1))
            if abs(lhs - rhs) > 1e-8:
                neg_rot = False
    neg_rad = True
    for l in range(n_max - 1):
        ns = list(range(l, n_max + 1))
        coeffs = _quadratic_fit(ns, [rad.get((n, l), 0.0) ** 2 for n in ns])
        for n in range(l + 1, n_max + 1):
            # T- coefficient out of |n l m> equals the solved table at
            # n-1; the discovered relation is table(n-1) = |P(-n)|
            lhs = rad.get((n - 1, l), 0.0) ** 2
            rhs = abs(float(np.polyval(coeffs, -n)))
            if abs(lhs - rhs) > 1e-8:
                neg_rad = False

    return CoefficientTables(
        n_max=n_max,
        rot=rot,
        beta=beta,
        gamma=gamma,
        rad=rad,
        residual=residual,
        index_negation_rot=neg_rot,
        index_negation_rad=neg_rad,
    )


# ---------------------------------------------------------------------------
# matrices


@dataclass
class RepSet:
    """All 15 generator matrices plus the Hamiltonian at one cutoff."""
    n_max: int
    states: list
    index: dict
    generators: np.ndarray        # (15, dim, dim) complex, Hermitian
    hamiltonian: np.ndarray       # (dim, dim) real diagonal
    interior_mask: np.ndarray     # (dim,) 0/1 floats, n <= n_max - 2
    tables: CoefficientTables = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def interior_projector(self) -> np.ndarray:
        return np.diag(self.interior_mask)

    def generator(self, name) -> np.ndarray:
        return self.generators[parse_generator(name)]

    def primed(self, name) -> np.ndarray:
        """Skew-Hermitian form X' = -iX of one generator."""
        return -1j * self.generators[parse_generator(name)]


def build_generator_matrix(name, n_max, tables: CoefficientTables | None = None):
    """One Hermitian generator matrix at the given cutoff."""
    if tables is None:
        return build_rep(n_max).generator(name)
    gens, _, _ = _build_all(n_max, tables)
    return gens[parse_generator(name)]


def _build_all(n_max, tables):
    states, index = build_basis(n_max)
    dim = len(states)
    rot, bet, gam, rad = tables.rot, tables.beta, tables.gamma, tables.rad

    def mat():
        return np.zeros((dim, dim), dtype=complex)

    def put(M, tgt, src, val):
        # silently drop targets outside the truncation
        if tgt in index:
            M[index[tgt], index[src]] += val

    L3, Lp = mat(), mat()
    A3, Ap = mat(), mat()
    B3, Bp = mat(), mat()
    G3, Gp = mat(), mat()
    Tp, D = mat(), mat()

    for s in states:
        n, l, m = s
        i = index[s]
        L3[i, i] = m
        D[i, i] = n
        put(Lp, (n, l, m + 1), s, rot[(l, m)])
        put(Tp, (n + 1, l, m), s, rad[(n, l)])
        if l - 1 >= abs(m):
            a = _alpha(l, m)
            put(A3, (n, l - 1, m), s, a * _c(n, l))
            put(B3, (n - 1, l - 1, m), s, a * _u(n, l))
            put(B3, (n + 1, l - 1, m), s, a * _v(n, l))
            put(G3, (n - 1, l - 1, m), s, -1j * a * _u(n, l))
            put(G3, (n + 1, l - 1, m), s, 1j * a * _v(n, l))
        if l + 1 <= n - 1:
            put(A3, (n, l + 1, m), s, _alpha(l + 1, m) * _c(n, l + 1))
        put(B3, (n - 1, l + 1, m), s, _alpha(l + 1, m) * _v(n - 1, l + 1))
        put(B3, (n + 1, l + 1, m), s, _alpha(l + 1, m) * _u(n + 1, l + 1))
        put(G3, (n - 1, l + 1, m), s, -1j * _alpha(l + 1, m) * _v(n - 1, l + 1))
        put(G3, (n + 1, l + 1, m), s, 1j * _alpha(l + 1, m) * _u(n + 1, l + 1))
        if l - 1 >= 0:
            b = bet[(l - 1, m)] if (l - 1, m) in bet else beta_mix(l - 1, m)
            put(Ap, (n, l - 1, m + 1), s, b * _c(n, l))
            put(Bp, (n - 1, l - 1, m + 1), s, b * _u(n, l))
            put(Bp, (n + 1, l - 1, m + 1), s, b * _v(n, l))
            put(Gp, (n - 1, l - 1, m + 1), s, -1j * b * _u(n, l))
            put(Gp, (n + 1, l - 1, m + 1), s, 1j * b * _v(n, l))
        g = gam[(l + 1, m)] if (l + 1, m) in gam else gamma_mix(l + 1, m)
        if l + 1 <= n - 1:
            put(Ap, (n, l + 1, m + 1), s, -g * _c(n, l + 1))
        put(Bp, (n - 1, l + 1, m + 1), s, -g * _v(n - 1, l + 1))
        put(Bp, (n + 1, l + 1, m + 1), s, -g * _u(n + 1, l + 1))
        put(Gp, (n - 1, l + 1, m + 1), s, 1j * g * _v(n - 1, l + 1))
        put(Gp, (n + 1, l + 1, m + 1), s, -1j * g * _u(n + 1, l + 1))

    def cart(M3, Mp):
        Mm = Mp.conj().T
        return (Mp + Mm) / 2, (Mp - Mm) / (2j), M3

    L1, L2, _ = cart(L3, Lp)
    A1, A2, _ = cart(A3, Ap)
    B1, B2, _ = cart(B3, Bp)
    G1, G2, _ = cart(G3, Gp)
    # radial scalars: the n-ladder pair maps to (S, C) as T+- = C +- iS,
    # the assignment fixed by [D, T+-] = +-T+- and revalidated against
    # [C, S] = -iD in the test suite
    Tm = Tp.conj().T
    S = (Tp - Tm) / (2j)
    C = (Tp + Tm) / 2
    gens = np.array([L1, L2, L3, A1, A2, A3, B1, B2, B3, G1, G2, G3, S, C, D])
    return gens, states, index


@lru_cache(maxsize=8)
def build_rep(n_max: int) -> RepSet:
    """Build all generator matrices and the Hamiltonian at one cutoff.

    Cached; treat the returned arrays as read-only.
    """
    tables = derive_ladder_coefficients(max(n_max, 3))
    gens, states, index = _build_all(n_max, tables)
    ham = np.diag([energy(n) for (n, l, m) in states]).astype(complex)
    mask = np.array([1.0 if n <= n_max - 2 else 0.0 for (n, l, m) in states])
    for arr in (gens, ham, mask):
        arr.setflags(write=False)
    return RepSet(
        n_max=n_max,
        states=states,
        index=index,
        generators=gens,
        hamiltonian=ham,
        interior_mask=mask,
        tables=tables,
    )


def build_hamiltonian(n_max: int) -> np.ndarray:
    states, _ = build_basis(n_max)
    return np.diag([energy(n) for (n, l, m) in states]).astype(complex)


# ---------------------------------------------------------------------------
# symmetry tags


def symmetry_tag(M: np.ndarray, tol_herm: float = 1e-12,
                 tol_unit: float = 1e-10) -> str | None:
    """Verified symmetry tag of a matrix: Hermitian, SkewHermitian,
    Unitary, or None.  Unitary wins over the others if both hold."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return None
    eye = np.eye(M.shape[0])
    if np.abs(M.conj().T @ M - eye).max() < tol_unit:
        return "Unitary"
    if np.abs(M - M.conj().T).max() < tol_herm:
        return "Hermitian"
    if np.abs(M + M.conj().T).max() < tol_herm:
        return "SkewHermitian"
    return None


def assert_hermitian(M, tol=1e-12):
    defect = float(np.abs(M - np.asarray(M).conj().T).max())
    if defect >= tol:
        raise SymmetryError(f"Hermiticity defect {defect:.3e} >= {tol:.1e}")
    return defect


# ---------------------------------------------------------------------------
# checks


@dataclass
class ResidualReport:
    max_residual: float
    worst: tuple
    residuals: dict
    tol: float

    @property
    def ok(self):
        return self.max_residual < self.tol

    def to_dict(self):
        return {
            "max_residual": self.max_residual,
            "worst": list(self.worst),
            "residuals": self.residuals,
            "tolerance": self.tol,
            "ok": self.ok,
        }


def check_commutators(rep: RepSet, tol: float = 1e-9) -> ResidualReport:
    """Interior-projected commutator defects against the structure table.

    In the Hermitian convention the table reads [X_a, X_b] =
    i sum_c f_abc X_c, with the same real f as the skew basis.
    """
    f = structure_constants()
    P = rep.interior_mask
    gens = rep.generators
    out = {}
    worst = (0.0, ("", ""))
    for a in range(N_GENERATORS):
        for b in range(a + 1, N_GENERATORS):
            comm = gens[a] @ gens[b] - gens[b] @ gens[a]
            for c in range(N_GENERATORS):
                if f[a][b][c]:
                    comm = comm - 1j * f[a][b][c] * gens[c]
            res = float(np.abs(P[:, None] * comm * P[None, :]).max())
            out[f"{NAMES[a]},{NAMES[b]}"] = res
            if res > worst[0]:
                worst = (res, (NAMES[a], NAMES[b]))
    return ResidualReport(worst[0], worst[1], out, tol)


def casimir_check(rep: RepSet, tol: float = 1e-9) -> dict:
    """Degeneracy-algebra invariants on the interior:
    L.A + A.L = 0 and L^2 + A^2 = D^2 - 1."""
    g = rep.generators
    L = g[0:3]
    A = g[3:6]
    D = g[14]
    P = rep.interior_mask
    eye = np.eye(rep.dim)
    la = sum(L[i] @ A[i] + A[i] @ L[i] for i in range(3))
    quad = sum(L[i] @ L[i] + A[i] @ A[i] for i in range(3)) - (D @ D - eye)
    r1 = float(np.abs(P[:, None] * la * P[None, :]).max())
    r2 = float(np.abs(P[:, None] * quad * P[None, :]).max())
    return {
        "LA_residual": r1,
        "quadratic_residual": r2,
        "tolerance": tol,
        "ok": r1 < tol and r2 < tol,
    }


def heisenberg_generator(rep: RepSet, name, t: float) -> np.ndarray:
    """G(t) = e^{-iHt} G(0) e^{iHt}, exact via diagonal phases.

    Phases come from energy differences, not a product of per-state
    phases: entries between equal energies then stay exactly constant
    instead of drifting by roundoff.
    """
    G = rep.generator(name) if isinstance(name, str) else np.asarray(name)
    energies = np.real(np.diag(rep.hamiltonian))
    omega = energies[:, None] - energies[None, :]
    return np.exp(-1j * t * omega) * G


# ---------------------------------------------------------------------------
# export


def export_matrices(rep: RepSet, out_dir, fmt: str = "json"):
    """Write all 15 generators plus H as sparse triplets.

    fmt "json": one file per operator {dim, entries: [[row, col, re, im]]}.
    fmt "csv": same triplets as row,col,re,im lines.
    Also writes basis.json with the (n, l, m) order.
    """
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "basis.json"), "w") as fh:
        json.dump(
            {"schema_version": 1, "n_max": rep.n_max,
             "states": [list(s) for s in rep.states]},
            fh, sort_keys=True)
        fh.write("\n")
    named = {NAMES[i]: rep.generators[i] for i in range(N_GENERATORS)}
    named["H"] = rep.hamiltonian
    written = []
    for name, M in named.items():
        rows, cols = np.nonzero(np.abs(M) > 0)
        triplets = [
            [int(r), int(c), float(M[r, c].real), float(M[r, c].imag)]
            for r, c in zip(rows, cols)
        ]
        if fmt == "json":
            path = os.path.join(out_dir, f"{name}.json")
            with open(path, "w") as fh:
                json.dump({"dim": rep.dim, "name": name, "entries": triplets},
                          fh, sort_keys=True)
                fh.write("\n")
        elif fmt == "csv":
            path = os.path.join(out_dir, f"{name}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["row", "col", "re", "im"])
                w.writerows(triplets)
        else:
            raise ValueError(f"unknown export format {fmt!r}")
        written.append(path)
    return written

"""Classical phase-space realizations of the algebra, both energy signs.

The 15 generators are realized as real functions of (r, p, t) in atomic
units, with H = p^2/2 - 1/|r|.  Bound motion (H < 0) and scattering
motion (H > 0) have separate realizations; both are verified here by
randomized numerical Poisson-bracket tests against the structure table,
with derivatives taken by central finite differences.  No symbolic
algebra is involved.

Sign conventions are not assumed: `determine_convention` searches the
small discrete space of per-family sign flips (plus the orientation of
the r/|r| term in the Runge-Lenz-type vector, which is printed both
ways in the literature) and reports the variant that satisfies the
table.  `verify_relations` runs that determination and then the full
randomized check, recording everything in its report.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import structure_constants_array
from .errors import DomainError
from .generators import NAMES, N_GENERATORS, parse_generator

_FAMILY_OF = {}
for _n in NAMES:
    _FAMILY_OF[_n] = _n[0] if _n[0] in "LABG" else _n
FAMILIES = ("L", "A", "B", "G", "S", "C", "D")


def _dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def _norm(v):
    return np.sqrt(_dot(v, v))


def hamiltonian(r, p):
    """H = p^2/2 - 1/|r| in atomic units."""
    return 0.5 * _dot(p, p) - 1.0 / _norm(np.asarray(r, dtype=float))


def _vector_dict(prefix, vec_fn):
    # expand a 3-vector-valued function into per-component entries
    out = {}
    for comp in range(3):
        def f(r, p, t, _c=comp, _v=vec_fn):
            return _v(r, p, t)[..., _c]
        out[f"{prefix}{comp + 1}"] = f
    return out


def negative_energy_functions(a_sign: int = +1) -> dict:
    """Realization valid on H < 0.

    a_sign fixes the orientation of the r/|r| term inside the
    Runge-Lenz-type vector A; +1 is the variant that satisfies the
    bracket table (see `determine_convention`).
    """

    def kin(r, p):
        k = np.sqrt(-2.0 * hamiltonian(r, p))
        return k, 1.0 / k

    def zeta(r, p, t):
        k, _ = kin(r, p)
        return k * _dot(r, p) + k**3 * t

    def L_vec(r, p, t):
        return np.cross(r, p)

    def A_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, nu = kin(r, p)
        rhat = r / _norm(r)[..., None]
        return nu[..., None] * (np.cross(np.cross(r, p), p) + a_sign * rhat)

    def B_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, nu = kin(r, p)
        z = zeta(r, p, t)
        rn = _norm(r)
        rp = _dot(r, p)
        rhat = r / rn[..., None]
        return (rn * np.cos(z))[..., None] * p \
            - (nu * rp * np.sin(z))[..., None] * p \
            + (nu * np.sin(z))[..., None] * rhat

    def G_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, nu = kin(r, p)
        z = zeta(r, p, t)
        rn = _norm(r)
        rp = _dot(r, p)
        rhat = r / rn[..., None]
        return -(rn * np.sin(z))[..., None] * p \
            - (nu * rp * np.cos(z))[..., None] * p \
            + (nu * np.cos(z))[..., None] * rhat

    def S_fn(r, p, t):
        _, nu = kin(r, p)
        z = zeta(r, p, t)
        w = 1.0 + 2.0 * hamiltonian(r, p) * _norm(r)
        return -_dot(r, p) * np.sin(z) - nu * w * np.cos(z)

    def C_fn(r, p, t):
        _, nu = kin(r, p)
        z = zeta(r, p, t)
        w = 1.0 + 2.0 * hamiltonian(r, p) * _norm(r)
        return -_dot(r, p) * np.cos(z) + nu * w * np.sin(z)

    def D_fn(r, p, t):
        _, nu = kin(r, p)
        return nu

    fns = {}
    fns.update(_vector_dict("L", L_vec))
    fns.update(_vector_dict("A", A_vec))
    fns.update(_vector_dict("B", B_vec))
    fns.update(_vector_dict("G", G_vec))
    fns["S"] = S_fn
    fns["C"] = C_fn
    fns["D"] = D_fn
    return fns


def positive_energy_functions(b_sign: int = +1) -> dict:
    """Realization valid on H > 0; b_sign plays the role a_sign plays
    for bound motion (here the r/|r| term sits inside B)."""

    def kin(r, p):
        k = np.sqrt(2.0 * hamiltonian(r, p))
        return k, 1.0 / k

    def zeta(r, p, t):
        k, _ = kin(r, p)
        return k * _dot(r, p) - k**3 * t

    def L_vec(r, p, t):
        return np.cross(r, p)

    def A_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, mu = kin(r, p)
        z = zeta(r, p, t)
        rn = _norm(r)
        rp = _dot(r, p)
        rhat = r / rn[..., None]
        return (rn * np.sinh(z))[..., None] * p \
            - (mu * rp * np.cosh(z))[..., None] * p \
            + (mu * np.cosh(z))[..., None] * rhat

    def B_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, mu = kin(r, p)
        rhat = r / _norm(r)[..., None]
        return mu[..., None] * (np.cross(np.cross(r, p), p) + b_sign * rhat)

    def G_vec(r, p, t):
        r = np.asarray(r, dtype=float)
        p = np.asarray(p, dtype=float)
        _, mu = kin(r, p)
        z = zeta(r, p, t)
        rn = _norm(r)
        rp = _dot(r, p)
        rhat = r / rn[..., None]
        return (rn * np.cosh(z))[..., None] * p \
            - (mu * rp * np.sinh(z))[..., None] * p \
            + (mu * np.sinh(z))[..., None] * rhat

    def S_fn(r, p, t):
        _, mu = kin(r, p)
        z = zeta(r, p, t)
        w = 2.0 * hamiltonian(r, p) * _norm(r) + 1.0
        return mu * w * np.sinh(z) - _dot(r, p) * np.cosh(z)

    def D_fn(r, p, t):
        _, mu = kin(r, p)
        z = zeta(r, p, t)
        w = 2.0 * hamiltonian(r, p) * _norm(r) + 1.0
        return _dot(r, p) * np.sinh(z) - mu * w * np.cosh(z)

    def C_fn(r, p, t):
        _, mu = kin(r, p)
        return mu

    fns = {}
    fns.update(_vector_dict("L", L_vec))
    fns.update(_vector_dict("A", A_vec))
    fns.update(_vector_dict("B", B_vec))
    fns.update(_vector_dict("G", G_vec))
    fns["S"] = S_fn
    fns["C"] = C_fn
    fns["D"] = D_fn
    return fns


def realization(sign: str, rhat_sign: int = +1) -> dict:
    """Name -> callable(r, p, t) map for the given energy sign.

    sign is "negative" or "positive".  The callables assume admissible
    inputs; use `eval_generator` for checked evaluation.
    """
    if sign == "negative":
        return negative_energy_functions(a_sign=rhat_sign)
    if sign == "positive":
        return positive_energy_functions(b_sign=rhat_sign)
    raise ValueError(f"energy sign must be 'negative' or 'positive', got {sign!r}")


def check_admissible(sign, r, p, r_min=1e-3):
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(_norm(r) <= r_min):
        raise DomainError(f"|r| <= r_min = {r_min}")
    H = hamiltonian(r, p)
    if sign == "negative" and np.any(H >= 0):
        raise DomainError("H >= 0 at a point given to the negative-energy realization")
    if sign == "positive" and np.any(H <= 0):
        raise DomainError("H <= 0 at a point given to the positive-energy realization")


def eval_generator(name, sign, r, p, t=0.0, r_min=1e-3):
    """Checked evaluation of one generator function at a phase point.

    Raises DomainError when H has the wrong sign or |r| <= r_min.
    """
    check_admissible(sign, r, p, r_min=r_min)
    fns = realization(sign)
    fn = fns[NAMES[parse_generator(name)]]
    out = fn(np.asarray(r, dtype=float), np.asarray(p, dtype=float), t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# finite-difference machinery


def _fd_gradients(fn, r, p, t, h):
    """Central-difference gradients of a batched scalar function.

    Returns (d/dr, d/dp) with shapes matching (..., 3).
    """
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    gr = np.empty(r.shape)
    gp = np.empty(p.shape)
    for i in range(3):
        dr = np.zeros(3)
        dr[i] = h
        gr[..., i] = (fn(r + dr, p, t) - fn(r - dr, p, t)) / (2 * h)
        gp[..., i] = (fn(r, p + dr, t) - fn(r, p - dr, t)) / (2 * h)
    return gr, gp


def _fd_time(fn, r, p, t, h):
    return (fn(r, p, t + h) - fn(r, p, t - h)) / (2 * h)


def poisson_bracket(f, g, r, p, t=0.0, h=1e-5, richardson=False):
    """{f, g} = sum_i df/dr_i dg/dp_i - df/dp_i dg/dr_i by central FD.

    f and g are callables of (r, p, t).  With richardson=True the
    bracket is extrapolated from steps h and h/2, knocking out the
    leading O(h^2) error term.
    """
    def pb(step):
        fr, fp = _fd_gradients(f, r, p, t, step)
        gr, gp = _fd_gradients(g, r, p, t, step)
        return _dot(fr, gp) - _dot(fp, gr)

    if not richardson:
        return pb(h)
    coarse = pb(h)
    fine = pb(h / 2)
    return (4.0 * fine - coarse) / 3.0


def sample_points(sign, n, seed=0, r_box=3.0, p_box=2.0, r_min=0.4,
                  h_floor=0.15, h_cap=1.0, zeta_max=2.0, t_box=1.0):
    """Rejection-sample n admissible phase points for the given sign.

    Draws r and p uniformly from boxes |r_i| <= r_box, |p_i| <= p_box
    and t uniformly from |t| <= t_box, keeping points with |r| >= r_min,
    h_floor <= |H| <= h_cap with the correct sign, and |zeta| <=
    zeta_max.  The upper bounds matter as much as the lower ones: the
    scattering realization grows like cosh(zeta), zeta itself carries a
    k^3 t term, and both ends of the energy window amplify third
    derivatives (1/k factors at small |H|, k^3 at large), which is what
    finite-difference residuals are sensitive to.

    Returns (r, p, t, rejected_count).
    """
    rng = np.random.default_rng(seed)
    out_r, out_p, out_t = [], [], []
    rejected = 0
    want_neg = sign == "negative"
    while len(out_t) < n:
        m = max(4 * (n - len(out_t)), 64)
        r = rng.uniform(-r_box, r_box, (m, 3))
        p = rng.uniform(-p_box, p_box, (m, 3))
        t = rng.uniform(-t_box, t_box, m)
        rn = _norm(r)
        H = hamiltonian(r, p)
        ok = rn >= r_min
        if want_neg:
            ok &= (H <= -h_floor) & (H >= -h_cap)
            k = np.sqrt(np.abs(2 * H))
            z = k * _dot(r, p) + k**3 * t
        else:
            ok &= (H >= h_floor) & (H <= h_cap)
            k = np.sqrt(np.abs(2 * H))
            z = k * _dot(r, p) - k**3 * t
        ok &= np.abs(z) <= zeta_max
        rejected += int(m - ok.sum())
        out_r.extend(r[ok])
        out_p.extend(p[ok])
        out_t.extend(t[ok])
    r = np.array(out_r[:n])
    p = np.array(out_p[:n])
    t = np.array(out_t[:n])
    return r, p, t, rejected


def _value_and_grad_tables(fns, r, p, t, h):
    """Stack values (15, N) and FD gradients (15, N, 3) x2 over the basis."""
    N = len(np.atleast_1d(t))
    V = np.empty((N_GENERATORS, N))
    Gr = np.empty((N_GENERATORS, N, 3))
    Gp = np.empty((N_GENERATORS, N, 3))
    for i, name in enumerate(NAMES):
        fn = fns[name]
        V[i] = fn(r, p, t)
        Gr[i], Gp[i] = _fd_gradients(fn, r, p, t, h)
    return V, Gr, Gp


def _bracket_tensor(Gr, Gp):
    # PB[i, j, n] = {x_i, x_j} at point n
    return np.einsum("inx,jnx->ijn", Gr, Gp) - np.einsum("inx,jnx->ijn", Gp, Gr)


def _residual(PB, V, sigma, gsign):
    """Max-abs residual of sigma-dressed brackets against the table."""
    f = structure_constants_array()
    sig = np.asarray(sigma, dtype=float)
    lhs = sig[:, None, None] * sig[None, :, None] * PB
    rhs = gsign * np.einsum("ijc,c,cn->ijn", f, sig, V)
    return np.abs(lhs - rhs)


def _sigma_from_flips(flips):
    sig = np.ones(N_GENERATORS)
    for fam in flips:
        for i, name in enumerate(NAMES):
            if _FAMILY_OF[name] == fam:
                sig[i] = -1.0
    return sig


def determine_convention(sign, n_probe=6, seed=12345, h=1e-5, tol=1e-5):
    """Find which sign variant of the printed realization satisfies the table.

    Searched space: orientation of the r/|r| term (+1 or -1), a global
    bracket sign (+1 or -1), and independent sign flips of the seven
    families L, A, B, G, S, C, D.  Among variants whose max residual
    over probe points beats tol, the one with the fewest flips wins.

    Returns a dict with the chosen variant and its residual; raises
    RuntimeError if nothing in the space satisfies the table.
    """
    r, p, t, _ = sample_points(sign, n_probe, seed=seed)
    best = None
    for rhat_sign in (+1, -1):
        fns = realization(sign, rhat_sign=rhat_sign)
        V, Gr, Gp = _value_and_grad_tables(fns, r, p, t, h)
        PB = _bracket_tensor(Gr, Gp)
        for nflip in range(len(FAMILIES) + 1):
            for flips in itertools.combinations(FAMILIES, nflip):
                sig = _sigma_from_flips(flips)
                for gsign in (+1, -1):
                    res = float(_residual(PB, V, sig, gsign).max())
                    if res < tol:
                        cost = (nflip, rhat_sign < 0, gsign < 0)
                        cand = {
                            "rhat_sign": rhat_sign,
                            "family_flips": list(flips),
                            "global_sign": gsign,
                            "probe_residual": res,
                        }
                        if best is None or cost < best[0]:
                            best = (cost, cand)
            if best is not None:
                break  # found at this flip count; no cheaper variant exists
        if best is not None and best[0][0] == 0:
            break
    if best is None:
        raise RuntimeError(
            f"no sign variant satisfies the bracket table for {sign} energy"
        )
    return best[1]


@dataclass
class RelationReport:
    """Outcome of the randomized Poisson-bracket verification."""
    sign: str
    n_samples: int
    rejected: int
    seed: int
    h: float
    convention: dict
    max_residual: float
    worst_pair: tuple
    pair_residuals: dict
    constancy_max: float
    constancy_residuals: dict
    ok: bool
    tol: float = 1e-5

    def to_dict(self):
        return {
            "sign": self.sign,
            "n_samples": self.n_samples,
            "rejected_samples": self.rejected,
            "seed": self.seed,
            "h": self.h,
            "convention": self.convention,
            "max_residual": self.max_residual,
            "worst_pair": list(self.worst_pair),
            "pair_residuals": self.pair_residuals,
            "constancy_max": self.constancy_max,
            "constancy_residuals": self.constancy_residuals,
            "tolerance": self.tol,
            "ok": self.ok,
        }


def verify_relations(sign, n_samples=120, seed=0, h=1e-5, tol=1e-5,
                     richardson=False) -> RelationReport:
    """Randomized verification of all 105 bracket relations plus the
    constant-of-motion condition, for one energy sign.

    Samples admissible points, determines the sign convention
    empirically, then reports the max residual per generator pair and
    the max total-time-derivative residual per generator.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    conv = determine_convention(sign, h=h)
    r, p, t, rejected = sample_points(sign, n_samples, seed=seed)
    fns = realization(sign, rhat_sign=conv["rhat_sign"])
    V, Gr, Gp = _value_and_grad_tables(fns, r, p, t, h)
    PB = _bracket_tensor(Gr, Gp)
    if richardson:
        Vf, Grf, Gpf = _value_and_grad_tables(fns, r, p, t, h / 2)
        PB = (4.0 * _bracket_tensor(Grf, Gpf) - PB) / 3.0
    sig = _sigma_from_flips(conv["family_flips"])
    res = _residual(PB, V, sig, conv["global_sign"])

    pair_res = {}
    worst = (0.0, ("", ""))
    for i in range(N_GENERATORS):
        for j in range(i + 1, N_GENERATORS):
            rmax = float(res[i, j].max())
            pair_res[f"{NAMES[i]},{NAMES[j]}"] = rmax
            if rmax > worst[0]:
                worst = (rmax, (NAMES[i], NAMES[j]))

    # total time derivative d/dt x = dx/dt + {x, H} must vanish
    def Hfn(rr, pp, tt):
        return hamiltonian(rr, pp)

    const_res = {}
    cmax = 0.0
    for i, name in enumerate(NAMES):
        fn = fns[name]
        dt_part = _fd_time(fn, r, p, t, h)
        pb_h = poisson_bracket(fn, Hfn, r, p, t, h=h, richardson=richardson)
        cres = float(np.abs(dt_part + pb_h).max())
        const_res[name] = cres
        cmax = max(cmax, cres)

    max_res = worst[0]
    return RelationReport(
        sign=sign,
        n_samples=n_samples,
        rejected=rejected,
        seed=seed,
        h=h,
        convention=conv,
        max_residual=max_res,
        worst_pair=worst[1],
        pair_residuals=pair_res,
        constancy_max=cmax,
        constancy_residuals=const_res,
        ok=max_res < tol and cmax < tol,
        tol=tol,
    )


def verify_constant_of_motion(name, sign, r, p, t=0.0, h=1e-5, r_min=1e-3,
                              rhat_sign=+1):
    """|d fn/dt + {fn, H}| at one checked phase point.

    rhat_sign defaults to the table-consistent orientation; the wrong
    orientation breaks conservation of the Runge-Lenz-type vector, so
    the default matters here.
    """
    check_admissible(sign, r, p, r_min=r_min)
    fns = realization(sign, rhat_sign=rhat_sign)
    fn = fns[NAMES[parse_generator(name)]]

    def Hfn(rr, pp, tt):
        return hamiltonian(rr, pp)

    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    val = _fd_time(fn, r, p, t, h) + poisson_bracket(fn, Hfn, r, p, t, h=h)
    return float(np.abs(val))


def time_derivative_pairs(sign):
    """Partner map for d/dt: name -> (factor_sign, partner_name).

    d x/dt = factor_sign * k^3 * partner, with k = sqrt(-2H) for bound
    motion and sqrt(2H) for scattering motion; names absent from the
    map are time-independent.  Follows from the chain rule through
    zeta; verified numerically in the test suite.
    """
    if sign == "negative":
        out = {}
        for i in "123":
            out[f"B{i}"] = (+1, f"G{i}")
            out[f"G{i}"] = (-1, f"B{i}")
        out["S"] = (+1, "C")
        out["C"] = (-1, "S")
        return out
    if sign == "positive":
        out = {}
        for i in "123":
            out[f"A{i}"] = (-1, f"G{i}")
            out[f"G{i}"] = (-1, f"A{i}")
        out["S"] = (+1, "D")
        out["D"] = (+1, "S")
        return out
    raise ValueError(sign)

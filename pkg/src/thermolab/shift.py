"""Countable Markov shifts: cylinders, partition sums and truncated RPF solves.

Symbols are the integers 0, 1, 2, ...; the alphabet is materialized up to a
truncation level N. A potential is evaluated on words (rows of an integer
array); a locally constant potential of depth d reads the first d symbols.

The transfer operator is discretized on depth-d words,

    (L f)(w) = sum_a exp(Phi(a w_0 .. w_{d-2})) f(a w_0 .. w_{d-2}),

which is exact for potentials depending on at most d symbols. Its Perron
root is lambda = exp(P_G), the right eigenvector is h and the normalized
left eigenvector is the conformal measure of the depth-d cylinders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import BadGamma, EnumerationTooLarge, NoConvergence, PreconditionViolation, ShiftError

DEFAULT_BUDGET = 2_000_000


# ---------------------------------------------------------------------------
# shift spaces and words

@dataclass(frozen=True, eq=False)
class ShiftSpace:
    """Full shift on N symbols, or a subshift of finite type given by a 0/1 matrix."""

    N: int
    transitions: np.ndarray | None = None

    def __post_init__(self):
        if int(self.N) < 1:
            raise ShiftError("truncation N must be >= 1", N=self.N)
        if self.transitions is not None:
            T = np.asarray(self.transitions, dtype=bool)
            if T.shape != (self.N, self.N):
                raise ShiftError("transition matrix must be N x N", shape=T.shape)
            object.__setattr__(self, "transitions", T)

    @property
    def full(self) -> bool:
        return self.transitions is None

    def truncate(self, N: int) -> "ShiftSpace":
        if self.full:
            return ShiftSpace(N)
        return ShiftSpace(N, self.transitions[:N, :N])

    def count_words(self, length: int) -> int:
        if self.full:
            return self.N ** length
        v = np.ones(self.N)
        for _ in range(length - 1):
            v = self.transitions.astype(float) @ v
        return int(v.sum())

    def words(self, length: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """Admissible words of the given length in lexicographic order."""
        if length == 0:
            return np.zeros((1, 0), dtype=np.int64)
        if self.count_words(length) > budget:
            raise EnumerationTooLarge("too many words", N=self.N, length=length, budget=budget)
        if self.full:
            return all_words(self.N, length)
        W = np.arange(self.N, dtype=np.int64)[:, None]
        for _ in range(length - 1):
            nxt = np.repeat(W, self.N, axis=0)
            b = np.tile(np.arange(self.N, dtype=np.int64), len(W))
            keep = self.transitions[nxt[:, -1], b]
            W = np.column_stack([nxt[keep], b[keep]])
        return W

    def admissible(self, words: np.ndarray, cyclic: bool = False) -> np.ndarray:
        words = np.asarray(words)
        if self.full or words.shape[1] == 0:
            return np.ones(len(words), dtype=bool)
        ok = np.all(self.transitions[words[:, :-1], words[:, 1:]], axis=1)
        if cyclic:
            ok &= self.transitions[words[:, -1], words[:, 0]]
        return ok

    def to_dict(self) -> dict:
        return {"N": int(self.N),
                "transitions": None if self.full else self.transitions.astype(int).tolist()}


def all_words(N: int, length: int) -> np.ndarray:
    codes = np.arange(N ** length, dtype=np.int64)
    powers = N ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % N


def encode(words: np.ndarray, N: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.int64)
    powers = N ** np.arange(words.shape[1] - 1, -1, -1, dtype=np.int64)
    return words @ powers


@dataclass(frozen=True)
class Cylinder:
    word: tuple

    @property
    def depth(self) -> int:
        return len(self.word)


# ---------------------------------------------------------------------------
# potentials

@dataclass(frozen=True, eq=False)
class SymbolPotential:
    """Potential on the shift.

    ``func`` maps an integer array of words (rows, at least ``depth``
    columns) to values. When ``exact`` is true the potential is locally
    constant and reads only the first ``depth`` symbols; otherwise longer
    words locate a finer cylinder representative. ``tail_mass(N)`` bounds
    sum_{i >= N} exp(sup Phi on [i]) for countable alphabets.
    """

    func: Callable[[np.ndarray], np.ndarray]
    depth: int = 1
    exact: bool = True
    A: float = 0.0
    theta: float = 0.5
    rho: float | None = None
    alpha: float | None = None
    tail_mass: Callable[[int], float] | None = None
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ShiftError("theta must lie in (0, 1)", theta=self.theta)
        if self.A < 0:
            raise ShiftError("A must be >= 0", A=self.A)

    def __call__(self, words) -> np.ndarray:
        W = np.asarray(words, dtype=np.int64)
        if W.ndim == 1:
            W = W[None, :]
        vals = np.asarray(self.func(W), dtype=float).reshape(len(W))
        if not np.all(np.isfinite(vals)):
            raise ShiftError("potential is not finite on some cylinder")
        return vals

    def shifted(self, c: float) -> "SymbolPotential":
        f = self.func
        desc = dict(self.description, shift=self.description.get("shift", 0.0) + c)
        tm = self.tail_mass
        return SymbolPotential(lambda W: f(W) + c, self.depth, self.exact, self.A, self.theta,
                               self.rho, self.alpha,
                               None if tm is None else (lambda N: tm(N) * np.exp(c)), desc)


def locally_constant(values: Sequence[float] | Callable, tail_mass: Callable | None = None) -> SymbolPotential:
    """Depth-1 potential with Phi|[i] = values[i] (or values(i) for a callable)."""
    if callable(values):
        g = values
        return SymbolPotential(lambda W: g(W[:, 0]), 1, True, tail_mass=tail_mass,
                               description={"kind": "symbol_function"})
    v = np.asarray(values, dtype=float)
    return SymbolPotential(lambda W: v[W[:, 0]], 1, True, tail_mass=tail_mass,
                           description={"kind": "locally_constant", "values": v.tolist()})


def bernoulli(p: Sequence[float]) -> SymbolPotential:
    pot = locally_constant(np.log(np.asarray(p, dtype=float)))
    object.__setattr__(pot, "description", {"kind": "bernoulli", "p": list(map(float, p))})
    return pot


def markov(C: np.ndarray) -> SymbolPotential:
    """Depth-2 potential with Phi|[ij] = C[i, j]."""
    C = np.asarray(C, dtype=float)
    return SymbolPotential(lambda W: C[W[:, 0], W[:, 1]], 2, True,
                           description={"kind": "markov", "matrix": C.tolist()})


def table(values: np.ndarray) -> SymbolPotential:
    """Depth-d potential from an array of shape (N,)*d."""
    V = np.asarray(values, dtype=float)
    d = V.ndim
    return SymbolPotential(lambda W: V[tuple(W[:, i] for i in range(d))], d, True,
                           description={"kind": "table", "depth": d})


def power_law(s: float) -> SymbolPotential:
    """Phi|[i] = -s log(i + 1), i.e. weights (i+1)^-s; summable for s > 1."""
    if not s > 1:
        raise ShiftError("power law needs s > 1 to be summable", s=s)

    def tail(N: int) -> float:
        # sum_{k > N} k^-s <= int_N^inf x^-s dx
        return N ** (1.0 - s) / (s - 1.0)

    pot = locally_constant(lambda i: -s * np.log(i + 1.0), tail_mass=tail)
    object.__setattr__(pot, "description", {"kind": "power_law", "s": float(s)})
    return pot


def modified_potential(pot: SymbolPotential, target: Sequence[int], gamma: float,
                       flavor: str) -> SymbolPotential:
    """Add log(1 - gamma) on the target cylinder ("flat") or subtract it ("sharp")."""
    if not 0.0 < gamma < 1.0:
        raise BadGamma("gamma must lie in (0, 1)", gamma=gamma)
    if flavor not in ("flat", "sharp"):
        raise ShiftError("flavor must be 'flat' or 'sharp'", flavor=flavor)
    word = np.asarray(target, dtype=np.int64)
    c = np.log1p(-gamma) * (1.0 if flavor == "flat" else -1.0)
    f = pot.func
    k = len(word)

    def g(W):
        hit = np.all(W[:, :k] == word[None, :], axis=1)
        return f(W) + c * hit

    tm = pot.tail_mass
    return SymbolPotential(g, max(pot.depth, k), pot.exact, pot.A, pot.theta, pot.rho, pot.alpha,
                           tm, dict(pot.description, modified={"target": word.tolist(),
                                                               "gamma": gamma, "flavor": flavor}))


# ---------------------------------------------------------------------------
# measures and solutions

@dataclass
class CylinderMeasure:
    depth: int
    words: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def marginal(self, depth: int) -> "CylinderMeasure":
        if depth > self.depth:
            raise ShiftError("marginal deeper than the measure", depth=depth)
        keys, inv = np.unique(self.words[:, :depth], axis=0, return_inverse=True)
        w = np.zeros(len(keys))
        np.add.at(w, inv.reshape(-1), self.weights)
        return CylinderMeasure(depth, keys, w)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "words": self.words.tolist(), "weights": self.weights.tolist(),
                "total": self.total}


@dataclass
class GibbsSolution:
    lam: float
    h: np.ndarray
    m: np.ndarray
    states: np.ndarray
    depth: int
    K: float
    iterations: int
    residual: float
    converged: bool
    shift: ShiftSpace
    potential: SymbolPotential
    gibbs_depth: int = 0

    @property
    def log_lambda(self) -> float:
        return float(np.log(self.lam))

    def _lookup(self, words: np.ndarray) -> np.ndarray:
        codes = encode(words, self.shift.N)
        own = encode(self.states, self.shift.N)
        idx = np.searchsorted(own, codes)
        idx = np.minimum(idx, len(own) - 1)
        found = own[idx] == codes
        return np.where(found, idx, -1)

    def _prefix_sum(self, vec: np.ndarray, words: np.ndarray) -> np.ndarray:
        n = words.shape[1]
        N = self.shift.N
        scale = N ** (self.depth - n)
        codes = encode(self.states, N) // scale
        keys = encode(words, N)
        order = np.argsort(codes, kind="stable")
        sc = codes[order]
        csum = np.concatenate([[0.0], np.cumsum(vec[order])])
        lo = np.searchsorted(sc, keys, side="left")
        hi = np.searchsorted(sc, keys, side="right")
        return csum[hi] - csum[lo]

    def log_cylinder_m(self, words) -> np.ndarray:
        """log m([w]) for words of a common length (conformal extension)."""
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        n, d = W.shape[1], self.depth
        if n < d:
            with np.errstate(divide="ignore"):
                return np.log(self._prefix_sum(self.m, W))
        idx = self._lookup(W[:, n - d:])
        with np.errstate(divide="ignore"):
            out = np.where(idx >= 0, np.log(self.m[np.maximum(idx, 0)]), -np.inf)
        ll = np.log(self.lam)
        for k in range(n - d):
            out = out + self.potential(W[:, k:k + d]) - ll
        adm = self.shift.admissible(W)
        return np.where(adm, out, -np.inf)

    def cylinder_m(self, words) -> np.ndarray:
        return np.exp(self.log_cylinder_m(words))

    def cylinder_mu(self, words) -> np.ndarray:
        W = np.atleast_2d(np.asarray(words, dtype=np.int64))
        n, d = W.shape[1], self.depth
        if n < d:
            return self._prefix_sum(self.h * self.m, W)
        idx = self._lookup(W[:, :d])
        hval = np.where(idx >= 0, self.h[np.maximum(idx, 0)], 0.0)
        return hval * self.cylinder_m(W)

    def measure(self, depth: int | None = None, budget: int = DEFAULT_BUDGET) -> CylinderMeasure:
        """The invariant Gibbs measure mu = h m on cylinders of the given depth."""
        depth = self.depth if depth is None else depth
        W = self.shift.words(depth, budget)
        return CylinderMeasure(depth, W, self.cylinder_mu(W))

    def conformal(self, depth: int | None = None, budget: int = DEFAULT_BUDGET) -> CylinderMeasure:
        depth = self.depth if depth is None else depth
        W = self.shift.words(depth, budget)
        return CylinderMeasure(depth, W, self.cylinder_m(W))

    def integral(self) -> float:
        """Integral of the potential against mu (exact for locally constant potentials)."""
        mu = self.h * self.m
        return float(np.dot(mu, self.potential(self.states)))

    def entropy(self) -> float:
        """Entropy of mu as a Markov measure on depth-d blocks: H_{d+1} - H_d."""
        def block(n):
            W = self.shift.words(n)
            p = self.cylinder_mu(W)
            p = p[p > 0]
            return float(-np.sum(p * np.log(p)))
        return block(self.depth + 1) - block(self.depth)

    def to_dict(self) -> dict:
        m1 = self.conformal(1)
        return {"lambda": self.lam, "log_lambda": self.log_lambda, "depth": self.depth,
                "K": self.K, "gibbs_depth": self.gibbs_depth, "iterations": self.iterations,
                "residual": self.residual, "converged": self.converged,
                "states": self.states.tolist(), "h": self.h.tolist(), "m": self.m.tolist(),
                "m_depth1": m1.weights.tolist(), "shift": self.shift.to_dict()}


# ---------------------------------------------------------------------------
# transfer operator

def transfer_matrix(shift: ShiftSpace, pot: SymbolPotential, depth: int,
                    budget: int = DEFAULT_BUDGET):
    """Sparse matrix of L on functions of depth-d words, plus the word list."""
    states = shift.words(depth, budget)
    S, N = len(states), shift.N
    if S * N > 4 * budget:
        raise EnumerationTooLarge("transfer operator too large", states=S, budget=budget)
    phi = pot(states)
    codes = encode(states, N)
    rows, cols = [], []
    for a in range(N):
        pre = np.column_stack([np.full(S, a, dtype=np.int64), states[:, :-1]])
        ok = shift.admissible(pre[:, :2]) if depth >= 1 else np.ones(S, bool)
        if not shift.full:
            ok &= shift.transitions[a, states[:, 0]]
        pc = encode(pre, N)
        idx = np.searchsorted(codes, pc)
        idx = np.minimum(idx, S - 1)
        ok &= codes[idx] == pc
        rows.append(np.flatnonzero(ok))
        cols.append(idx[ok])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    L = sparse.csr_matrix((np.exp(phi[c]), (r, c)), shape=(S, S))
    return L, states


def _power(L, tol: float, max_iter: int):
    S = L.shape[0]
    LT = L.T.tocsr()
    h = np.ones(S)
    m = np.ones(S) / S
    lam_h = lam_m = 1.0
    res = np.inf
    for it in range(1, max_iter + 1):
        Lh = L @ h
        lam_h = Lh.max()
        if not lam_h > 0:
            raise NoConvergence("transfer operator annihilates the start vector")
        mL = LT @ m
        lam_m = mL.sum()
        res_h = np.max(np.abs(Lh - lam_h * h)) / lam_h
        res_m = np.sum(np.abs(mL - lam_m * m)) / lam_m
        res = max(res_h, res_m)
        h = Lh / lam_h
        m = mL / lam_m
        if res <= tol:
            return h, m, it, res
    raise NoConvergence("power iteration did not converge", iterations=max_iter, residual=float(res))


def default_depth(pot: SymbolPotential) -> int:
    return pot.depth if pot.exact else max(3, pot.depth)


def rpf_solve(shift: ShiftSpace, pot: SymbolPotential, depth: int | None = None, tol: float = 1e-12,
              max_iter: int = 100_000, gibbs_depth: int | None = None,
              budget: int = DEFAULT_BUDGET) -> GibbsSolution:
    """Leading eigendata of the transfer operator on a finite truncation.

    The default discretization depth is the potential's own depth when it
    is locally constant (which makes the solve exact) and 3 otherwise.
    """
    d = default_depth(pot) if depth is None else int(depth)
    if d < pot.depth and pot.exact:
        raise ShiftError("discretization depth below the potential's depth", depth=d, needed=pot.depth)
    if shift.full and pot.exact and d == 1:
        # rank one: lambda = sum e^phi_i, h = 1, m_i = e^phi_i / lambda
        states = shift.words(1, budget)
        phi = pot(states)
        ll = float(logsumexp(phi))
        sol = GibbsSolution(float(np.exp(ll)), np.ones(len(phi)), np.exp(phi - ll), states, 1, 1.0, 0, 0.0,
                            True, shift, pot)
    else:
        L, states = transfer_matrix(shift, pot, d, budget)
        h, m, it, res = _power(L, tol, max_iter)
        Lh = L @ h
        lam = float(m @ Lh) / float(m @ h)
        m = m / m.sum()
        h = h / float(h @ m)
        sol = GibbsSolution(lam, h, m, states, d, 1.0, it, float(res), True, shift, pot)
    gd = 2 * d if gibbs_depth is None else gibbs_depth
    sol.K, sol.gibbs_depth = _gibbs_constant(sol, gd, budget)
    return sol


def _gibbs_ratios(sol: GibbsSolution, n: int, budget: int):
    """log mu(C_w) - (S_n Phi - n log lambda) over words w of length n and
    all admissible extensions of length d - 1 used as representatives."""
    d = sol.depth
    ext = d - 1 if sol.potential.exact else d
    W = sol.shift.words(n + ext, budget)
    ll = sol.log_lambda
    Sn = np.zeros(len(W))
    for k in range(n):
        Sn += sol.potential(W[:, k:k + d] if sol.potential.exact else W[:, k:])
    with np.errstate(divide="ignore"):
        logmu = np.log(sol.cylinder_mu(W[:, :n]))
    return logmu - (Sn - n * ll)


def _gibbs_constant(sol: GibbsSolution, gibbs_depth: int, budget: int):
    K = 1.0
    used = 0
    for n in range(1, gibbs_depth + 1):
        ext = sol.depth - 1 if sol.potential.exact else sol.depth
        if sol.shift.count_words(n + ext) > budget:
            break
        r = _gibbs_ratios(sol, n, budget)
        r = r[np.isfinite(r)]
        if len(r):
            K = max(K, float(np.exp(np.max(np.abs(r)))))
        used = n
    return K, used


def gibbs_check(sol: GibbsSolution, depth: int, K_prime: float | None = None,
                budget: int = DEFAULT_BUDGET) -> dict:
    """Ratios mu(C_n) / exp(S_n Phi - n log lambda) for all cylinders up to ``depth``."""
    if not sol.converged:
        raise PreconditionViolation("solution did not converge")
    K_prime = sol.K * (1 + 1e-9) if K_prime is None else K_prime
    lo, hi = np.inf, -np.inf
    for n in range(1, depth + 1):
        r = _gibbs_ratios(sol, n, budget)
        r = r[np.isfinite(r)]
        lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
    rmin, rmax = float(np.exp(lo)), float(np.exp(hi))
    return {"depth": depth, "min_ratio": rmin, "max_ratio": rmax, "K_prime": K_prime,
            "pass": bool(rmin >= 1.0 / K_prime and rmax <= K_prime)}


def conformal_decay_check(sol: GibbsSolution, n_max: int, budget: int = DEFAULT_BUDGET,
                          normalization_tol: float = 1e-8) -> dict:
    """Check m(C_n) <= exp(-lam n) with lam = -log(K sup m(C_1)) for every cylinder."""
    if abs(sol.log_lambda) > normalization_tol:
        raise PreconditionViolation("solution is not normalized (log lambda != 0)",
                                    log_lambda=sol.log_lambda)
    sup_m1 = float(sol.conformal(1).weights.max())
    product = sol.K * sup_m1
    lam = -float(np.log(product))
    rows, violations = [], []
    tight = True
    for n in range(1, n_max + 1):
        W = sol.shift.words(n, budget)
        logm = sol.log_cylinder_m(W)
        top = float(np.max(logm))
        bound = -lam * n
        ok = top <= bound + 1e-12 * max(1.0, abs(bound))
        if not ok:
            bad = np.flatnonzero(logm > bound + 1e-12 * max(1.0, abs(bound)))
            violations += [{"n": n, "word": W[i].tolist(), "mass": float(np.exp(logm[i]))} for i in bad[:10]]
        is_tight = abs(top - bound) <= 1e-10 * max(1.0, abs(bound))
        tight &= is_tight
        rows.append({"n": n, "max_mass": float(np.exp(top)), "bound": float(np.exp(bound)),
                     "tight": bool(is_tight)})
    return {"lambda": lam, "K": sol.K, "sup_m1": sup_m1, "vacuous": bool(product >= 1.0),
            "pass": not violations, "tight": bool(tight), "rows": rows, "violations": violations}


# ---------------------------------------------------------------------------
# pressure

def log_partition_sum(shift: ShiftSpace, pot: SymbolPotential, n: int, a: int,
                      budget: int = 1_000_000, rep_depth: int | None = None) -> float:
    """log of the sum of exp(S_n Phi) over period-n points with x_0 = a."""
    if n < 1:
        raise ShiftError("n must be >= 1", n=n)
    if not 0 <= a < shift.N:
        raise ShiftError("anchor outside the alphabet", a=a, N=shift.N)
    if shift.N ** n > budget:
        raise EnumerationTooLarge("period-n enumeration exceeds budget", N=shift.N, n=n, budget=budget)
    tail = all_words(shift.N, n - 1)
    W = np.column_stack([np.full(len(tail), a, dtype=np.int64), tail])
    W = W[shift.admissible(W, cyclic=True)]
    if len(W) == 0:
        return -np.inf
    d = pot.depth if pot.exact else max(pot.depth, rep_depth or 3)
    reps = max(1, -(-d // n))
    long = np.tile(W, (1, reps + 1))
    S = np.zeros(len(W))
    for k in range(n):
        S += pot(long[:, k:k + d])
    return float(logsumexp(S))


def partition_sum(shift: ShiftSpace, pot: SymbolPotential, n: int, a: int,
                  budget: int = 1_000_000) -> float:
    return float(np.exp(log_partition_sum(shift, pot, n, a, budget)))


def gurevich_pressure(shift: ShiftSpace, pot: SymbolPotential, strategy: str = "truncation_sup",
                      n_max: int = 12, anchor: int = 0, budget: int = 1_000_000,
                      depth: int | None = None) -> dict:
    """Estimate P_G by periodic sums (n = 1..n_max) or by the running sup of
    truncated pressures (N = 1..n_max).

    Rows carry (n_or_N, estimate, running_sup, tail_bound). For truncations
    of a depth-1 potential with ``tail_mass`` the tail bound is
    log(1 + tail_mass(N)/lambda_N), so P_G lies in [estimate, estimate + tail_bound].
    """
    if n_max < 2:
        raise ShiftError("need at least two data points", n_max=n_max)
    rows = []
    sup = -np.inf
    if strategy == "periodic_sums":
        for n in range(1, n_max + 1):
            est = log_partition_sum(shift, pot, n, anchor, budget) / n
            sup = max(sup, est)
            rows.append({"n_or_N": n, "estimate": est, "running_sup": sup, "tail_bound": None})
    elif strategy == "truncation_sup":
        for N in range(1, n_max + 1):
            if N > shift.N:
                break
            sub = shift.truncate(N)
            try:
                sol = rpf_solve(sub, pot, depth=depth, gibbs_depth=0, budget=budget)
                est = sol.log_lambda
            except NoConvergence:
                est = float("nan")
            sup = est if not np.isfinite(sup) else max(sup, est) if np.isfinite(est) else sup
            tb = None
            if pot.tail_mass is not None and np.isfinite(est):
                tb = float(np.log1p(pot.tail_mass(N) / np.exp(est)))
            rows.append({"n_or_N": N, "estimate": est, "running_sup": sup, "tail_bound": tb})
    else:
        raise ShiftError("unknown strategy", strategy=strategy)
    last = rows[-1]
    value = last["running_sup"] if strategy == "truncation_sup" else last["estimate"]
    return {"strategy": strategy, "estimate": value, "tail_bound": last["tail_bound"],
            "anchor": anchor if strategy == "periodic_sums" else None, "rows": rows}


def bip_check(shift: ShiftSpace) -> dict:
    """Big images and preimages on the materialized alphabet.

    On a finite alphabet the whole alphabet is always a candidate witness, so
    the check asks for a witness that leaves out at least one symbol (any
    witness when N = 1). The reported witness is reduced greedily.
    """
    N = shift.N
    if shift.full:
        return {"bip": True, "witness": [0]}
    T = shift.transitions

    def works(S):
        S = list(S)
        if not S:
            return False
        into = T[S, :].any(axis=0)
        out = T[:, S].any(axis=1)
        return bool(np.all(into & out))

    candidates = [list(range(N))] if N == 1 else [[s for s in range(N) if s != r] for r in range(N)]
    for cand in candidates:
        if works(cand):
            wit = list(cand)
            for s in list(wit):
                trial = [t for t in wit if t != s]
                if works(trial):
                    wit = trial
            return {"bip": True, "witness": wit}
    return {"bip": False, "witness": None}

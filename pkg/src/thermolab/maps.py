"""Map families: evaluation, derivative data and critical-set geometry.

Points are floats for one-dimensional families and length-2 arrays
``(theta, x)`` for the skew product. Every family also implements
vectorized private kernels over arrays of points, which the rest of the
package uses for bulk orbit work.

Circle coordinates are iterated on the lattice ``Z/P`` (``P`` a large safe
prime) inside :func:`orbit` and :class:`OrbitStepper`. Iterating
``d*theta mod 1`` in binary floating point collapses every orbit onto 0
after about 53/log2(d) steps; the lattice keeps ``d*k mod P`` exact and
has no short cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BadParameters, EvalAtSingularity, OutOfDomain

LATTICE_PRIME = 288230376151706939
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class NonDegeneracyData:
    B: float
    beta: float
    b_exponent: float | None = None

    def __post_init__(self):
        if not (self.B > 0 and self.beta > 0):
            raise BadParameters("B and beta must be positive", B=self.B, beta=self.beta)
        bound = 0.5 * min(1.0, 1.0 / self.beta)
        if self.b_exponent is None:
            object.__setattr__(self, "b_exponent", min(1.0, 1.0 / self.beta) / 3.0)
        elif not self.b_exponent < bound:
            raise BadParameters("b_exponent must lie below min(1, 1/beta)/2",
                                b_exponent=self.b_exponent, bound=bound)


@dataclass(frozen=True)
class DerivativeData:
    norm_Df: float
    inv_norm: float
    det_Df: float
    dist_to_critical: float


class DynamicalMap:
    """Base class. Subclasses fill in the vectorized kernels."""

    family_tag = "custom"
    dim = 1
    circle_multiplier: int | None = None   # expansion factor of the circle coordinate

    # -- metadata ---------------------------------------------------------
    @property
    def parameters(self) -> dict:
        return {}

    @property
    def phase_space(self) -> np.ndarray:
        """Array of shape (dim, 2) with coordinate bounds."""
        raise NotImplementedError

    @property
    def critical_set(self) -> list[dict]:
        return []

    def to_config(self) -> dict:
        return {"family": self.family_tag, **self.parameters}

    # -- vectorized kernels -----------------------------------------------
    def _f(self, P: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _df(self, P: np.ndarray):
        """Return (norm, inv_norm, det) arrays."""
        raise NotImplementedError

    def _dist_c(self, P: np.ndarray) -> np.ndarray:
        return np.full(np.shape(P)[0], np.inf)

    def _singular(self, P: np.ndarray) -> np.ndarray:
        """Points where evaluation itself is undefined."""
        return np.zeros(np.shape(P)[0], dtype=bool)

    # -- lap structure (branches of monotonicity) --------------------------
    n_laps = 1

    def lap_bounds(self, label: int):
        raise NotImplementedError

    def _label(self, P: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _lap_eval(self, label: int, P: np.ndarray) -> np.ndarray:
        """Continuous extension of f on the closure of a lap."""
        return self._f(P)

    def _inverse(self, label: int, Q: np.ndarray):
        """Inverse of f restricted to lap ``label``; returns (points, valid)."""
        raise NotImplementedError

    # -- helpers ------------------------------------------------------------
    def _as_points(self, p) -> np.ndarray:
        P = np.asarray(p, dtype=float)
        if self.dim == 1:
            return P.reshape(-1)
        return P.reshape(-1, self.dim)

    def contains(self, P: np.ndarray, tol: float = DOMAIN_TOL) -> np.ndarray:
        bounds = self.phase_space
        if self.dim == 1:
            return (P >= bounds[0, 0] - tol) & (P <= bounds[0, 1] + tol)
        ok = np.ones(P.shape[0], dtype=bool)
        for i in range(self.dim):
            ok &= (P[:, i] >= bounds[i, 0] - tol) & (P[:, i] <= bounds[i, 1] + tol)
        return ok

    def distance(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """Phase-space distance, wrapping circle coordinates."""
        D = np.abs(np.asarray(P, float) - np.asarray(Q, float))
        if self.circle_multiplier is not None:
            if self.dim == 1:
                D = np.minimum(D, 1.0 - D)
            else:
                D[..., 0] = np.minimum(D[..., 0], 1.0 - D[..., 0])
        if self.dim == 1:
            return D
        return np.sqrt(np.sum(D * D, axis=-1))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        b = self.phase_space
        U = rng.random((n, self.dim))
        P = b[:, 0] + U * (b[:, 1] - b[:, 0])
        return P[:, 0] if self.dim == 1 else P


# ---------------------------------------------------------------------------
# families

class DoublingMap(DynamicalMap):
    family_tag = "doubling"
    circle_multiplier = 2
    n_laps = 2

    @property
    def phase_space(self):
        return np.array([[0.0, 1.0]])

    def _f(self, P):
        return np.mod(2.0 * P, 1.0)

    def _df(self, P):
        two = np.full(np.shape(P)[0], 2.0)
        return two, two.copy(), two.copy()

    def lap_bounds(self, label):
        return (0.5 * label, 0.5 * (label + 1))

    def _label(self, P):
        return np.where(P < 0.5, 0, 1)

    def _lap_eval(self, label, P):
        return 2.0 * P - label

    def _inverse(self, label, Q):
        Q = np.asarray(Q, float)
        valid = (Q >= -DOMAIN_TOL) & (Q <= 1.0 + DOMAIN_TOL)
        return (Q + label) / 2.0, valid


@dataclass(frozen=True, eq=False)
class QuadraticMap(DynamicalMap):
    """x -> a - x^2 on its invariant interval [p, -p], p = -(1 + sqrt(1+4a))/2."""

    a: float = 2.0
    family_tag = "quadratic"
    n_laps = 2

    def __post_init__(self):
        if not (0.0 < self.a <= 2.0):
            raise BadParameters("quadratic family needs 0 < a <= 2", a=self.a)

    @property
    def parameters(self):
        return {"a": self.a}

    @property
    def edge(self) -> float:
        return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * self.a))

    @property
    def phase_space(self):
        return np.array([[-self.edge, self.edge]])

    @property
    def critical_set(self):
        return [{"point": 0.0, "order": 2.0}]

    def _f(self, P):
        return self.a - P * P

    def _df(self, P):
        d = -2.0 * P
        n = np.abs(d)
        return n, n.copy(), d

    def _dist_c(self, P):
        return np.abs(P)

    def lap_bounds(self, label):
        return (-self.edge, 0.0) if label == 0 else (0.0, self.edge)

    def _label(self, P):
        return np.where(P < 0.0, 0, 1)

    def _inverse(self, label, Q):
        Q = np.asarray(Q, float)
        r = self.a - Q
        valid = (r >= -DOMAIN_TOL) & (Q >= -self.edge - DOMAIN_TOL)
        root = np.sqrt(np.clip(r, 0.0, None))
        return (-root if label == 0 else root), valid


@dataclass(frozen=True, eq=False)
class RovellaMap(DynamicalMap):
    """One-dimensional Lorenz-like model x -> sign(x) (a |x|^s - 1) on [-1, 1]."""

    a: float = 2.0
    s: float = 1.5
    family_tag = "rovella"
    n_laps = 2

    def __post_init__(self):
        if not self.s > 1.0:
            raise BadParameters("rovella model needs s > 1", s=self.s)
        if not (0.0 < self.a <= 2.0):
            raise BadParameters("rovella model needs 0 < a <= 2", a=self.a)

    @property
    def parameters(self):
        return {"a": self.a, "s": self.s}

    @property
    def phase_space(self):
        return np.array([[-1.0, 1.0]])

    @property
    def critical_set(self):
        return [{"point": 0.0, "order": self.s, "singular": True}]

    def _f(self, P):
        return np.sign(P) * (self.a * np.abs(P) ** self.s - 1.0)

    def _df(self, P):
        d = self.a * self.s * np.abs(P) ** (self.s - 1.0)
        return d, d.copy(), d.copy()

    def _dist_c(self, P):
        return np.abs(P)

    def _singular(self, P):
        return P == 0.0

    def lap_bounds(self, label):
        return (-1.0, 0.0) if label == 0 else (0.0, 1.0)

    def _label(self, P):
        return np.where(P < 0.0, 0, 1)

    def _lap_eval(self, label, P):
        sgn = -1.0 if label == 0 else 1.0
        return sgn * (self.a * np.abs(P) ** self.s - 1.0)

    def _inverse(self, label, Q):
        Q = np.asarray(Q, float)
        if label == 1:
            r = (Q + 1.0) / self.a
            valid = (r >= -DOMAIN_TOL) & (r <= 1.0 + DOMAIN_TOL)
            return np.clip(r, 0.0, None) ** (1.0 / self.s), valid
        r = (1.0 - Q) / self.a
        valid = (r >= -DOMAIN_TOL) & (r <= 1.0 + DOMAIN_TOL)
        return -(np.clip(r, 0.0, None) ** (1.0 / self.s)), valid


@dataclass(frozen=True, eq=False)
class VianaMap(DynamicalMap):
    """Skew product (theta, x) -> (d theta mod 1, a0 + alpha sin(2 pi theta) - x^2)."""

    a0: float = field(default_factory=lambda: misiurewicz_parameter())
    alpha: float = 0.01
    d: int = 16
    family_tag = "viana"
    dim = 2

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise BadParameters("d must be an integer >= 2", d=self.d)
        if not (1.0 < self.a0 - abs(self.alpha) and self.a0 + abs(self.alpha) < 2.0):
            raise BadParameters("need 1 < a0 - |alpha| and a0 + |alpha| < 2",
                                a0=self.a0, alpha=self.alpha)

    @property
    def circle_multiplier(self):
        return int(self.d)

    @property
    def n_laps(self):
        return 2 * int(self.d)

    @property
    def parameters(self):
        return {"a0": self.a0, "alpha": self.alpha, "d": int(self.d)}

    @property
    def iota(self) -> float:
        """Half-width of the forward-invariant fiber interval I = [-iota, iota]."""
        a_max = self.a0 + abs(self.alpha)
        a_min = self.a0 - abs(self.alpha)
        root = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * a_min))
        return 0.5 * (a_max + root)

    @property
    def phase_space(self):
        return np.array([[0.0, 1.0], [-self.iota, self.iota]])

    @property
    def critical_set(self):
        return [{"curve": "x = 0", "order": 2.0}]

    def a_of(self, theta):
        return self.a0 + self.alpha * np.sin(2.0 * np.pi * theta)

    def _f(self, P):
        th, x = P[:, 0], P[:, 1]
        return np.column_stack([np.mod(self.d * th, 1.0), self.a_of(th) - x * x])

    def _jac(self, P):
        th, x = P[:, 0], P[:, 1]
        J = np.zeros((P.shape[0], 2, 2))
        J[:, 0, 0] = self.d
        J[:, 1, 0] = 2.0 * np.pi * self.alpha * np.cos(2.0 * np.pi * th)
        J[:, 1, 1] = -2.0 * x
        return J

    def _df(self, P):
        J = self._jac(P)
        s = np.linalg.svd(J, compute_uv=False)
        det = -2.0 * self.d * P[:, 1]
        return s[:, 0], s[:, 1], det

    def _dist_c(self, P):
        return np.abs(P[:, 1])

    # labels: k in [0, d) for the circle sheet, times 2 for the fiber sign
    def _label(self, P):
        k = np.minimum(np.floor(P[:, 0] * self.d).astype(int), int(self.d) - 1)
        return 2 * k + (P[:, 1] >= 0.0)

    def _lap_eval(self, label, P):
        k = label // 2
        th, x = P[:, 0], P[:, 1]
        return np.column_stack([self.d * th - k, self.a_of(th) - x * x])

    def _inverse(self, label, Q):
        k, sign = divmod(int(label), 2)
        th = (Q[:, 0] + k) / self.d
        r = self.a_of(th) - Q[:, 1]
        valid = (r >= -DOMAIN_TOL) & (r <= self.iota ** 2 + DOMAIN_TOL)
        root = np.sqrt(np.clip(r, 0.0, None))
        x = root if sign else -root
        return np.column_stack([th, x]), valid


class CustomMap(DynamicalMap):
    """User-supplied interval map from vectorized callables.

    ``critical_points`` split the interval into laps on which ``f`` is
    assumed monotone; branch inverses are found with Brent's method.
    """

    family_tag = "custom"

    def __init__(self, f: Callable, df: Callable, interval: Sequence[float],
                 critical_points: Sequence[float] = (), critical_orders: Sequence[float] | None = None,
                 singular: bool = False):
        self.f, self.df = f, df
        self.interval = (float(interval[0]), float(interval[1]))
        self.crit = tuple(sorted(float(c) for c in critical_points))
        self.orders = tuple(critical_orders) if critical_orders else (2.0,) * len(self.crit)
        self.singular = singular
        cuts = (self.interval[0],) + self.crit + (self.interval[1],)
        self._laps = list(zip(cuts[:-1], cuts[1:]))
        self.n_laps = len(self._laps)

    @property
    def phase_space(self):
        return np.array([self.interval])

    @property
    def critical_set(self):
        return [{"point": c, "order": o} for c, o in zip(self.crit, self.orders)]

    def _f(self, P):
        return np.asarray(self.f(P), float)

    def _df(self, P):
        d = np.asarray(self.df(P), float)
        return np.abs(d), np.abs(d), d

    def _dist_c(self, P):
        if not self.crit:
            return np.full(np.shape(P)[0], np.inf)
        return np.min(np.abs(P[:, None] - np.array(self.crit)[None, :]), axis=1)

    def _singular(self, P):
        if not self.singular:
            return np.zeros(np.shape(P)[0], dtype=bool)
        return np.isin(P, self.crit)

    def lap_bounds(self, label):
        return self._laps[label]

    def _label(self, P):
        return np.searchsorted(np.array(self.crit), P, side="right") if self.crit else np.zeros(len(P), int)

    def _inverse(self, label, Q):
        lo, hi = self._laps[label]
        flo, fhi = float(self.f(np.array([lo]))[0]), float(self.f(np.array([hi]))[0])
        out = np.full(len(Q), np.nan)
        valid = np.zeros(len(Q), dtype=bool)
        for i, q in enumerate(np.asarray(Q, float)):
            if min(flo, fhi) - DOMAIN_TOL <= q <= max(flo, fhi) + DOMAIN_TOL:
                g = lambda t: float(self.f(np.array([t]))[0]) - q  # noqa: E731
                if g(lo) == 0.0:
                    out[i] = lo
                elif g(hi) == 0.0:
                    out[i] = hi
                elif g(lo) * g(hi) < 0:
                    out[i] = brentq(g, lo, hi, xtol=1e-15)
                else:
                    continue
                valid[i] = True
        return out, valid


# ---------------------------------------------------------------------------
# construction

def misiurewicz_parameter(tol: float = 1e-15) -> float:
    """Parameter in (1, 2) where the critical orbit of a - x^2 lands on the
    positive fixed point after three steps (0 -> a -> a - a^2 = -q -> q)."""

    def g(a):
        q = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * a))
        return (a - a * a) + q

    return float(brentq(g, 1.3, 1.8, xtol=tol))


FAMILIES = {
    "doubling": DoublingMap,
    "quadratic": QuadraticMap,
    "rovella": RovellaMap,
    "viana": VianaMap,
}


def make_map(family: str, **params) -> DynamicalMap:
    """Build a map from a family tag and named parameters."""
    if family not in FAMILIES:
        raise BadParameters(f"unknown map family {family!r}", family=family)
    cls = FAMILIES[family]
    if family == "doubling":
        if params:
            raise BadParameters("doubling takes no parameters", params=params)
        return cls()
    try:
        return cls(**params)
    except TypeError as exc:
        raise BadParameters(str(exc), family=family, params=params) from None


# ---------------------------------------------------------------------------
# single-point operations

def _check_point(m: DynamicalMap, P: np.ndarray):
    if not np.all(np.isfinite(P)) or not np.all(m.contains(P)):
        raise OutOfDomain("point outside the phase space", point=P.tolist())


def eval_map(m: DynamicalMap, p):
    """Image of one point."""
    P = m._as_points(p)
    _check_point(m, P)
    if np.any(m._singular(P)):
        raise EvalAtSingularity("evaluation at the singular point", point=P.tolist())
    Q = m._f(P)
    return float(Q[0]) if m.dim == 1 else Q[0]


def derivative_data(m: DynamicalMap, p) -> DerivativeData:
    P = m._as_points(p)
    _check_point(m, P)
    dist = m._dist_c(P)
    if dist[0] == 0.0 or np.any(m._singular(P)):
        raise EvalAtSingularity("derivative requested on the critical set", point=P.tolist())
    n, inv, det = m._df(P)
    return DerivativeData(float(n[0]), float(inv[0]), float(det[0]), float(dist[0]))


def jacobian(m: DynamicalMap, p) -> np.ndarray:
    """Full Jacobian matrix (1x1 for interval maps)."""
    P = m._as_points(p)
    if isinstance(m, VianaMap):
        return m._jac(P)[0]
    return np.array([[m._df(P)[2][0]]])


# ---------------------------------------------------------------------------
# orbits

class OrbitStepper:
    """Iterates a batch of points, keeping circle coordinates on the lattice."""

    def __init__(self, m: DynamicalMap, P0):
        self.m = m
        P = m._as_points(P0).copy()
        self.mult = m.circle_multiplier
        if self.mult is not None:
            col = P if m.dim == 1 else P[:, 0]
            big = self.mult * LATTICE_PRIME >= 2 ** 63
            k = np.array([int(round(float(t) * LATTICE_PRIME)) % LATTICE_PRIME for t in np.mod(col, 1.0)],
                         dtype=object if big else np.int64)
            self.k = k
        self.P = P

    def points(self) -> np.ndarray:
        if self.mult is None:
            return self.P
        theta = np.asarray(self.k, dtype=float) / LATTICE_PRIME
        if self.m.dim == 1:
            return theta
        self.P[:, 0] = theta
        return self.P

    def advance(self) -> np.ndarray:
        P = self.points()
        if self.mult is None:
            self.P = self.m._f(P)
        else:
            if self.m.dim > 1:
                self.P = self.m._f(P)
            self.k = (self.k * self.mult) % LATTICE_PRIME
        return self.points()


def orbit(m: DynamicalMap, p, n: int) -> np.ndarray:
    """Points x_0 .. x_n of the forward orbit; shape (n+1,) or (n+1, dim)."""
    P = m._as_points(p)
    _check_point(m, P)
    st = OrbitStepper(m, P)
    out = [st.points().copy()]
    for _ in range(n):
        cur = st.points()
        if np.any(m._singular(cur)):
            raise EvalAtSingularity("orbit reached the singular point", step=len(out) - 1)
        out.append(st.advance().copy())
    arr = np.array(out)
    return arr[:, 0] if m.dim == 1 else arr[:, 0, :]


def trajectory(m: DynamicalMap, p, n: int) -> np.ndarray:
    """Like :func:`orbit` but with scalar loops for the built-in families.

    Meant for long single orbits (Birkhoff averages), where per-step array
    overhead dominates. Circle coordinates use the same lattice as
    :class:`OrbitStepper`.
    """
    P = m._as_points(p)
    _check_point(m, P)
    if isinstance(m, QuadraticMap):
        a, x = m.a, float(P[0])
        out = [x]
        for _ in range(n):
            x = a - x * x
            out.append(x)
        return np.array(out)
    if isinstance(m, RovellaMap):
        a, s, x = m.a, m.s, float(P[0])
        out = [x]
        for i in range(n):
            if x == 0.0:
                raise EvalAtSingularity("orbit reached the singular point", step=i)
            x = a * abs(x) ** s - 1.0 if x > 0 else 1.0 - a * abs(x) ** s
            out.append(x)
        return np.array(out)
    if isinstance(m, (DoublingMap, VianaMap)):
        d, Pr = m.circle_multiplier, LATTICE_PRIME
        t0 = float(np.mod(P[0] if m.dim == 1 else P[0, 0], 1.0))
        k = int(round(t0 * Pr)) % Pr
        ks = [k]
        for _ in range(n):
            k = k * d % Pr
            ks.append(k)
        theta = np.array(ks, dtype=float) / Pr
        if m.dim == 1:
            return theta
        amp = m.a_of(theta).tolist()
        x = float(P[0, 1])
        xs = [x]
        for i in range(n):
            x = amp[i] - x * x
            xs.append(x)
        return np.column_stack([theta, xs])
    return orbit(m, p, n)


# ---------------------------------------------------------------------------
# certificates

def check_nondegeneracy(m: DynamicalMap, nd: NonDegeneracyData, sample_count: int = 10_000,
                        seed: int = 0, region: Sequence[Sequence[float]] | None = None) -> dict:
    """Sample the two non-degeneracy inequalities.

    ``ratio_bounds`` is the worst value of max(d^beta/(B inv_norm), norm d^beta/B)
    and ``ratio_lipschitz`` the worst |log inv_norm(x) - log inv_norm(y)| /
    (B d(x,C)^-beta d(x,y)) over close pairs. Both must be <= 1 to pass.
    """
    if sample_count < 1:
        raise BadParameters("sample_count must be >= 1", sample_count=sample_count)
    rng = np.random.default_rng(seed)
    if not m.critical_set:
        return {"pass": True, "vacuous": True, "ratio_bounds": 0.0, "ratio_lipschitz": 0.0,
                "samples": sample_count, "witness": None}
    bounds = np.array(region, float).reshape(m.dim, 2) if region is not None else m.phase_space
    U = rng.random((sample_count, m.dim))
    X = bounds[:, 0] + U * (bounds[:, 1] - bounds[:, 0])
    X = X[:, 0] if m.dim == 1 else X
    d = m._dist_c(X)
    keep = d > 0
    X, d = X[keep], d[keep]
    norm, inv, _ = m._df(X)
    db = d ** nd.beta
    r1 = np.maximum(db / (nd.B * inv), norm * db / nd.B)

    # close pairs with d(x, y) < d(x, C) / 2
    if m.dim == 1:
        Y = X + (rng.random(len(X)) * 2 - 1) * 0.5 * d * (1 - 1e-9)
    else:
        ang = rng.random(len(X)) * 2 * np.pi
        rad = rng.random(len(X)) * 0.5 * d * (1 - 1e-9)
        Y = X + np.column_stack([np.cos(ang), np.sin(ang)]) * rad[:, None]
        Y[:, 0] = np.mod(Y[:, 0], 1.0)
    ok = m.contains(Y, tol=0.0) & (m._dist_c(Y) > 0)
    X2, Y2, d2 = X[ok], Y[ok], d[ok]
    _, inv_y, _ = m._df(Y2)
    dxy = m.distance(X2, Y2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.abs(np.log(inv[ok]) - np.log(inv_y)) / (nd.B * d2 ** (-nd.beta) * dxy)
    r2 = np.where(dxy > 0, r2, 0.0)

    i1, i2 = int(np.argmax(r1)), int(np.argmax(r2)) if len(r2) else 0
    worst1, worst2 = float(r1[i1]), float(r2[i2]) if len(r2) else 0.0
    witness = None
    if worst1 > 1.0:
        witness = {"inequality": "bounds", "point": np.atleast_1d(X[i1]).tolist(), "ratio": worst1}
    elif worst2 > 1.0:
        witness = {"inequality": "lipschitz", "point": np.atleast_1d(X2[i2]).tolist(),
                   "pair": np.atleast_1d(Y2[i2]).tolist(), "ratio": worst2}
    return {"pass": witness is None, "vacuous": False, "ratio_bounds": worst1,
            "ratio_lipschitz": worst2, "samples": int(len(X)), "pairs": int(len(X2)),
            "witness": witness}


def bc_certificate(m: DynamicalMap, params: dict, horizon: int, sample_orbits: int = 100,
                   seed: int = 0) -> dict:
    """Finite-horizon check of the expansion and slow-recurrence conditions.

    ``params`` keys: kappa, beta, lambda, sigma, delta. The expansion
    condition and slow recurrence are checked along the orbit of each
    critical value; expansion outside the delta-neighbourhood of the
    critical set is checked on ``sample_orbits`` random orbits.
    """
    if horizon < 1:
        raise BadParameters("horizon must be >= 1", horizon=horizon)
    if m.dim != 1 or not m.critical_set:
        raise BadParameters("certificate needs an interval map with critical points")
    kappa, beta, lam = float(params["kappa"]), float(params["beta"]), float(params["lambda"])
    sigma, delta = float(params["sigma"]), float(params["delta"])
    if not (0.0 < sigma < lam / 5.0):
        raise BadParameters("sigma must lie in (0, lambda/5)", sigma=sigma, bound=lam / 5.0)
    slack = 1e-9
    crit = [c["point"] for c in m.critical_set]
    order_max = max(c["order"] for c in m.critical_set)
    report = {"pass": True, "horizon": horizon, "violations": [], "params": dict(params)}

    def fail(cond, **info):
        report["pass"] = False
        report["violations"].append({"condition": cond, **info})

    for c in crit:
        x = float(m._lap_eval(int(m._label(np.array([c - 1e-300]))[0]), np.array([c]))[0])
        log_d, first_exp, first_rec = 0.0, None, None
        for n in range(1, horizon + 1):
            dc = float(m._dist_c(np.array([x]))[0])
            if dc == 0.0:
                fail("expansion", critical_point=c, n=n, reason="critical orbit hits C")
                break
            log_d += float(np.log(m._df(np.array([x]))[0][0]))
            if first_exp is None and log_d < lam * n - slack * n:
                first_exp = n
                fail("expansion", critical_point=c, n=n, log_derivative=log_d, required=lam * n)
            x = float(m._f(np.array([x]))[0])
            dc = float(m._dist_c(np.array([x]))[0])
            if first_rec is None and (dc == 0.0 or np.log(dc) < -sigma * n - slack):
                first_rec = n
                fail("slow_recurrence", critical_point=c, k=n, distance=dc, required=float(np.exp(-sigma * n)))
            if first_exp is not None and first_rec is not None:
                break

    # expansion outside B_delta on sampled orbits
    rng = np.random.default_rng(seed)
    X = m.sample(sample_orbits, rng)
    crit_arr = np.array(crit)
    in_B = lambda P: np.min(np.abs(P[:, None] - crit_arr[None, :]), axis=1) < delta  # noqa: E731
    in_fB = np.zeros(len(X), dtype=bool)
    for c in crit:
        lo, hi = c - delta, c + delta
        grid = np.linspace(lo, hi, 2001)
        img = m._f(grid[m._dist_c(grid) > 0] if np.any(m._singular(grid)) else grid)
        in_fB |= (X >= img.min()) & (X <= img.max())
    log_d = np.zeros(len(X))
    alive = ~in_B(X)
    P = X.copy()
    worst = np.inf
    for n in range(1, horizon + 1):
        if not np.any(alive):
            break
        log_d = log_d + np.log(np.where(alive, m._df(np.where(alive, P, 1.0))[0], 1.0))
        P = np.where(alive, m._f(np.where(alive, P, 1.0)), P)
        nxt_in = in_B(P)
        strong = in_fB | nxt_in
        need = np.where(strong, np.log(kappa) + beta * n,
                        np.log(kappa) + (order_max - 1) * np.log(delta) + beta * n)
        margin = log_d - need
        bad = alive & (margin < -slack * n)
        if np.any(alive):
            worst = min(worst, float(np.min(margin[alive])))
        if np.any(bad):
            i = int(np.argmax(bad))
            fail("expansion_outside", n=n, start=float(X[i]), log_derivative=float(log_d[i]),
                 required=float(need[i]))
            break
        alive &= ~nxt_in
    report["expansion_outside_min_margin"] = None if worst == np.inf else worst
    return report


def rovella_certificate(a: float, s: float, params: dict, horizon: int,
                        sample_count: int = 10_000, seed: int = 0) -> dict:
    """Finite-horizon checks for the Lorenz-like model family.

    (C1) derivative bounds by sampling, giving tight K1, K2; (C2) growth of
    (f^n)'(+-1) beyond lambda_c^n for n >= 1; (C3) |f^{n-1}(+-1)| >
    exp(-alpha n) for n >= 1. Optionally checks r > s + 3 when ``r`` is
    supplied. Orbit density of +-1 is reported as a diagnostic only.
    """
    if not s > 1.0:
        raise BadParameters("s must exceed 1", s=s)
    if horizon < 1:
        raise BadParameters("horizon must be >= 1", horizon=horizon)
    m = RovellaMap(a=a, s=s)
    lam_c, alpha = float(params["lambda_c"]), float(params["alpha"])
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, sample_count)
    X = X[X != 0]
    ratio = m._df(X)[0] / np.abs(X) ** (s - 1.0)
    report = {"pass": True, "horizon": horizon, "K1": float(ratio.max()), "K2": float(ratio.min()),
              "violations": [], "params": dict(params)}
    slack = 1e-9
    visits = []
    for start in (1.0, -1.0):
        x, log_d, failed = start, 0.0, {"C2": False, "C3": False}
        for n in range(1, horizon + 1):
            if not failed["C3"] and not (abs(x) > np.exp(-alpha * n) * (1 + slack)):
                failed["C3"] = True
                report["violations"].append({"condition": "C3", "start": start, "n": n, "value": abs(x)})
            if x == 0.0:
                report["violations"].append({"condition": "C2", "start": start, "n": n,
                                             "reason": "orbit hits the singular point"})
                break
            log_d += float(np.log(m._df(np.array([x]))[0][0]))
            if not failed["C2"] and not (log_d > n * np.log(lam_c) + slack * n):
                failed["C2"] = True
                report["violations"].append({"condition": "C2", "start": start, "n": n,
                                             "log_derivative": log_d, "required": n * np.log(lam_c)})
            x = float(m._f(np.array([x]))[0])
            visits.append(x)
    if "r" in params:
        if not float(params["r"]) > s + 3:
            report["violations"].append({"condition": "r>s+3", "r": float(params["r"]), "s": s})
    hist = np.histogram(visits, bins=20, range=(-1, 1))[0]
    report["orbit_density_bins_hit"] = int(np.count_nonzero(hist))
    report["pass"] = not report["violations"]
    return report

"""Inducing schemes built from full returns to a base region.

A branch is a cell P of the base region U together with an inducing time
tau and the lap labels of x, f(x), ..., f^{tau-1}(x) for x in P; f^tau maps
P homeomorphically onto U, and P is the pullback of U along those labels.
Branch symbols 0, 1, 2, ... are assigned in order of (tau, position), so a
scheme doubles as the alphabet of a full shift.

Interval maps are handled exactly: the images f^n(J) of the not-yet-returned
pieces J of U are tracked as intervals and split at lap boundaries, and a
piece whose image covers U contributes a branch (the pullback of U). The
skew product uses a sample grid to propose candidate words, then validates
each candidate by pulling back the boundary of U.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BaseBallEscapes, NoBranchesFound, OrbitLeavesScheme, PotentialUndefined, PreconditionViolation
from .hyperbolic import HyperbolicParams, _scan
from .maps import DynamicalMap, NonDegeneracyData, OrbitStepper, make_map
from .potentials import BasePotential
from .shift import CylinderMeasure, SymbolPotential

_TOL = 1e-12


@dataclass
class Branch:
    tau: int
    word: tuple
    cell: list            # [lo, hi] on intervals; [[th_lo, th_hi], [x_lo, x_hi]] bounding box on the cylinder
    mass: float           # Lebesgue measure of the cell divided by that of U

    def to_dict(self) -> dict:
        return {"tau": self.tau, "word": list(self.word), "cell": self.cell, "mass": self.mass}


@dataclass
class InducingScheme:
    map: DynamicalMap
    base: np.ndarray                  # (dim, 2) bounds of U
    branches: list[Branch]
    completeness_mass: float
    params: dict = field(default_factory=dict)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def taus(self) -> np.ndarray:
        return np.array([b.tau for b in self.branches], dtype=np.int64)

    @property
    def masses(self) -> np.ndarray:
        return np.array([b.mass for b in self.branches])

    @property
    def radius(self) -> float:
        return float(np.max(self.base[:, 1] - self.base[:, 0]) / 2.0)

    @property
    def centre(self):
        c = self.base.mean(axis=1)
        return float(c[0]) if self.map.dim == 1 else c

    def truncated(self, N: int) -> "InducingScheme":
        return InducingScheme(self.map, self.base, self.branches[:N],
                              float(sum(b.mass for b in self.branches[:N])), dict(self.params, truncation=N))

    def lebesgue_measure(self) -> CylinderMeasure:
        """Lebesgue measure of U restricted to the branches, on depth-1 cylinders."""
        W = np.arange(self.n_branches, dtype=np.int64)[:, None]
        return CylinderMeasure(1, W, self.masses)

    def to_dict(self) -> dict:
        return {"map": self.map.to_config(), "base": self.base.tolist(),
                "branches": [b.to_dict() for b in self.branches],
                "completeness_mass": self.completeness_mass, "params": self.params}

    @classmethod
    def from_dict(cls, data: dict) -> "InducingScheme":
        cfg = dict(data["map"])
        m = make_map(cfg.pop("family"), **cfg)
        br = [Branch(int(b["tau"]), tuple(b["word"]), b["cell"], float(b["mass"])) for b in data["branches"]]
        return cls(m, np.array(data["base"], float), br, float(data["completeness_mass"]), data.get("params", {}))

    # -- geometry -----------------------------------------------------------
    def pullback(self, symbols, U) -> np.ndarray:
        """Pull points of U back through branches symbols[-1], ..., symbols[0].

        ``symbols`` is an integer array (rows, L) and ``U`` holds one point of
        U per row; the result holds the matching points of the cylinders.
        """
        S = np.atleast_2d(np.asarray(symbols, dtype=np.int64))
        X = np.array(U, float, copy=True)
        for col in range(S.shape[1] - 1, -1, -1):
            for s in np.unique(S[:, col]):
                rows = S[:, col] == s
                X[rows] = _pull(self.map, self.branches[s].word, X[rows])[0]
        return X

    def block_sums(self, phi: BasePotential, symbols, U) -> np.ndarray:
        """phi-bar at the points of the cylinders [symbols] mapped by F^L to U."""
        S = np.atleast_2d(np.asarray(symbols, dtype=np.int64))
        Y = self.pullback(S[:, 1:], U) if S.shape[1] > 1 else np.array(U, float, copy=True)
        out = np.zeros(len(S))
        for s in np.unique(S[:, 0]):
            rows = S[:, 0] == s
            _, chain, _ = _pull(self.map, self.branches[s].word, Y[rows], keep_chain=True)
            tot = np.zeros(int(rows.sum()))
            for pts in chain[:-1]:
                tot += phi(pts)
            out[rows] = tot
        return out

    def u_samples(self, count: int, rng) -> np.ndarray:
        b = self.base
        P = b[:, 0] + rng.random((count, self.map.dim)) * (b[:, 1] - b[:, 0])
        return P[:, 0] if self.map.dim == 1 else P

    def u_corners(self) -> np.ndarray:
        b = self.base
        if self.map.dim == 1:
            return np.array([b[0, 0], b[0, 1]])
        return np.array([[b[0, i], b[1, j]] for i in (0, 1) for j in (0, 1)])


def _pull(m: DynamicalMap, word, Q, keep_chain: bool = False):
    """Pull Q back along the lap labels ``word``; returns (points, chain)."""
    cur = np.array(Q, float, copy=True)
    chain = [cur] if keep_chain else None
    ok = np.ones(len(cur), dtype=bool)
    for lab in reversed(word):
        cur, valid = m._inverse(int(lab), cur)
        ok &= valid
        if keep_chain:
            chain.append(cur)
    if keep_chain:
        chain = chain[::-1]
    return cur, chain, ok


def _pull_words(m: DynamicalMap, W: np.ndarray, Q: np.ndarray):
    """Vectorized pullback where every row has its own word."""
    cur = np.array(Q, float, copy=True)
    ok = np.ones(len(cur), dtype=bool)
    for j in range(W.shape[1] - 1, -1, -1):
        for lab in np.unique(W[:, j]):
            rows = W[:, j] == lab
            cur[rows], valid = m._inverse(int(lab), cur[rows])
            ok[rows] &= valid
    return cur, ok


def _hyperbolic_at(m: DynamicalMap, nd, params: HyperbolicParams | None, P: np.ndarray, n: int) -> np.ndarray:
    """Whether n is a hyperbolic time for each point of P."""
    if params is None or len(P) == 0:
        return np.ones(len(P), dtype=bool)
    times, _, hit = _scan(m, P, params, params.resolve_b(nd), n)
    return np.array([(not h) and bool(t) and t[-1] == n for t, h in zip(times, hit)])


def build_scheme(m: DynamicalMap, nd: NonDegeneracyData | None, params: HyperbolicParams | None,
                 base_point, max_time: int, resolution: float = 1e-6, base_region=None,
                 max_pieces: int = 200_000) -> InducingScheme:
    """Discover branches by first (hyperbolic) full return to U.

    U is ``base_region`` when given (bounds per coordinate), otherwise the
    ball of radius ``params.delta_ball`` about ``base_point`` clipped to the
    phase space. With ``params`` set, a return at time n counts only if n
    is a hyperbolic time for the centre of the candidate cell. Pieces
    shorter than ``resolution`` are dropped as uncovered mass.
    """
    if max_time < 1:
        raise NoBranchesFound("max_time must be >= 1", max_time=max_time)
    if not resolution > 0:
        raise PreconditionViolation("resolution must be positive", resolution=resolution)
    ps = m.phase_space
    if base_region is not None:
        base = np.array(base_region, float).reshape(m.dim, 2)
    else:
        if params is None:
            raise PreconditionViolation("need params.delta_ball or an explicit base_region")
        c = np.atleast_1d(np.asarray(base_point, float))
        base = np.column_stack([c - params.delta_ball, c + params.delta_ball])
    base = np.column_stack([np.maximum(base[:, 0], ps[:, 0]), np.minimum(base[:, 1], ps[:, 1])])
    if np.any(base[:, 1] <= base[:, 0]):
        raise BaseBallEscapes("base region misses the phase space", base=base.tolist())
    if m.dim == 1:
        branches, mass = _build_interval(m, nd, params, base[0], max_time, resolution, max_pieces)
    else:
        branches, mass = _build_cylinder(m, nd, params, base, max_time, resolution)
    if not branches:
        raise NoBranchesFound("no full return found up to max_time", max_time=max_time)
    info = {"max_time": max_time, "resolution": resolution,
            "hyperbolic": None if params is None else {"sigma": params.sigma, "epsilon": params.epsilon,
                                                        "delta_ball": params.delta_ball}}
    return InducingScheme(m, base, branches, mass, info)


def _build_interval(m, nd, params, base, T, resolution, max_pieces):
    u0, u1 = float(base[0]), float(base[1])
    width = u1 - u0
    images = []
    for lab in range(m.n_laps):
        lo, hi = m.lap_bounds(lab)
        y = m._lap_eval(lab, np.array([lo, hi]))
        images.append((min(y), max(y)))
    if not any(a <= u0 + _TOL and b >= u1 - _TOL for a, b in images):
        raise BaseBallEscapes("U is not inside the image of any full branch", base=[u0, u1])

    W = np.zeros((1, 0), dtype=np.int64)
    A = np.array([u0])
    B = np.array([u1])
    found = []        # (tau, lo, hi, word)
    for n in range(1, T + 1):
        nW, nA, nB = [], [], []
        for lab in range(m.n_laps):
            lo, hi = m.lap_bounds(lab)
            ia, ib = np.maximum(A, lo), np.minimum(B, hi)
            keep = ib - ia > 1e-15
            if not np.any(keep):
                continue
            ya = m._lap_eval(lab, ia[keep])
            yb = m._lap_eval(lab, ib[keep])
            nW.append(np.column_stack([W[keep], np.full(int(keep.sum()), lab)]))
            nA.append(np.minimum(ya, yb))
            nB.append(np.maximum(ya, yb))
        if not nW:
            break
        W, A, B = np.vstack(nW), np.concatenate(nA), np.concatenate(nB)
        # drop pieces of U shorter than the resolution
        ja, _ = _pull_words(m, W, A)
        jb, _ = _pull_words(m, W, B)
        keep = np.abs(jb - ja) >= resolution
        W, A, B = W[keep], A[keep], B[keep]
        if len(W) > max_pieces:
            raise PreconditionViolation("piece count exceeds max_pieces; raise resolution",
                                        pieces=len(W), max_pieces=max_pieces)
        full = (A <= u0 + _TOL) & (B >= u1 - _TOL)
        if np.any(full):
            idx = np.flatnonzero(full)
            ca, oka = _pull_words(m, W[idx], np.full(len(idx), u0))
            cb, okb = _pull_words(m, W[idx], np.full(len(idx), u1))
            mid, _ = _pull_words(m, W[idx], np.full(len(idx), 0.5 * (u0 + u1)))
            good = oka & okb & _hyperbolic_at(m, nd, params, mid, n)
            accepted = idx[good]
            for i, k in zip(idx[good], np.flatnonzero(good)):
                lo_, hi_ = sorted((float(ca[k]), float(cb[k])))
                found.append((n, lo_, hi_, tuple(int(v) for v in W[i])))
            # split off the covered part of accepted images
            rest = np.ones(len(W), dtype=bool)
            rest[accepted] = False
            extraW, extraA, extraB = [], [], []
            for i in accepted:
                if A[i] < u0 - 1e-15:
                    extraW.append(W[i]); extraA.append(A[i]); extraB.append(u0)
                if B[i] > u1 + 1e-15:
                    extraW.append(W[i]); extraA.append(u1); extraB.append(B[i])
            W, A, B = W[rest], A[rest], B[rest]
            if extraW:
                W = np.vstack([W, np.array(extraW, dtype=np.int64).reshape(-1, W.shape[1])])
                A = np.concatenate([A, extraA])
                B = np.concatenate([B, extraB])
        if len(W) == 0:
            break
    found.sort(key=lambda t: (t[0], t[1]))
    branches = [Branch(t, w, [lo, hi], (hi - lo) / width) for t, lo, hi, w in found]
    return branches, float(sum(b.mass for b in branches))


def _viana_fiber_width(m, word, th_nodes, base):
    """Length of the fiber of the cell over each theta node."""
    d = int(m.d)
    x0, x1 = base[1]
    th = [th_nodes]
    for lab in word[:-1]:
        th.append(d * th[-1] - lab // 2)
    lo = np.full(len(th_nodes), x0)
    hi = np.full(len(th_nodes), x1)
    for j in range(len(word) - 1, -1, -1):
        a = m.a_of(th[j])
        sign = 1.0 if word[j] % 2 else -1.0
        lo = sign * np.sqrt(np.clip(a - lo, 0, None))
        hi = sign * np.sqrt(np.clip(a - hi, 0, None))
    return np.abs(hi - lo)


def _build_cylinder(m, nd, params, base, T, resolution):
    per_axis = int(min(400, max(8, np.ceil((base[0, 1] - base[0, 0]) / resolution))))
    gt = np.linspace(base[0, 0], base[0, 1], per_axis + 2)[1:-1]
    gx = np.linspace(base[1, 0], base[1, 1], per_axis + 2)[1:-1]
    G = np.array([[t, x] for t in gt for x in gx])
    area = float(np.prod(base[:, 1] - base[:, 0]))
    edge = np.linspace(0, 1, 9)
    boundary = np.vstack([
        np.column_stack([base[0, 0] + edge * (base[0, 1] - base[0, 0]), np.full(9, base[1, 0])]),
        np.column_stack([base[0, 0] + edge * (base[0, 1] - base[0, 0]), np.full(9, base[1, 1])]),
        np.column_stack([np.full(9, base[0, 0]), base[1, 0] + edge * (base[1, 1] - base[1, 0])]),
        np.column_stack([np.full(9, base[0, 1]), base[1, 0] + edge * (base[1, 1] - base[1, 0])]),
        [base.mean(axis=1)]])
    inner = np.array([[base[0, 0] + (i + .5) / 5 * (base[0, 1] - base[0, 0]),
                       base[1, 0] + (j + .5) / 5 * (base[1, 1] - base[1, 0])] for i in range(5) for j in range(5)])

    st = OrbitStepper(m, G)
    labels = []
    assigned = np.zeros(len(G), dtype=bool)
    accepted = []     # (tau, word)

    def in_cell(P, word):
        s2 = OrbitStepper(m, P)
        ok = np.ones(len(P), dtype=bool)
        for lab in word:
            ok &= m._label(s2.points()) == lab
            s2.advance()
        end = s2.points()
        return ok & np.all((end >= base[:, 0]) & (end <= base[:, 1]), axis=1)

    for n in range(1, T + 1):
        P = st.points()
        labels.append(m._label(P).copy())
        P = st.advance()
        inside = np.all((P >= base[:, 0]) & (P <= base[:, 1]), axis=1) & ~assigned
        if not np.any(inside):
            continue
        L = np.column_stack(labels)
        words = sorted({tuple(int(v) for v in row) for row in L[inside]})
        for word in words:
            _, ok = _pull_words(m, np.tile(np.array(word), (len(boundary), 1)), boundary)
            if not np.all(ok):
                continue
            centre, _ = _pull_words(m, np.array([word]), base.mean(axis=1)[None, :])
            if not _hyperbolic_at(m, nd, params, centre, n)[0]:
                continue
            pts, _ = _pull_words(m, np.tile(np.array(word), (len(inner), 1)), inner)
            clash = any(np.any(in_cell(pts, w)) for _, w in accepted)
            if clash:
                continue
            accepted.append((n, word))
            assigned |= np.all(L[:, :n] == np.array(word)[None, :], axis=1) & inside
    branches = []
    xg, wg = np.polynomial.legendre.leggauss(16)
    for tau, word in sorted(accepted, key=lambda t: (t[0], t[1])):
        d = int(m.d)
        ths = np.array(base[0], float)
        for lab in reversed(word):
            ths = (ths + lab // 2) / d
        tl, th_ = sorted(ths)
        nodes = tl + (xg + 1) / 2 * (th_ - tl)
        width = _viana_fiber_width(m, word, nodes, base)
        mass = float(np.sum(wg * width) * (th_ - tl) / 2) / area
        pts, _ = _pull_words(m, np.tile(np.array(word), (len(boundary), 1)), boundary)
        box = [[tl, th_], [float(pts[:, 1].min()), float(pts[:, 1].max())]]
        branches.append(Branch(tau, word, box, mass))
    return branches, float(sum(b.mass for b in branches))


# ---------------------------------------------------------------------------
# induced potentials

class InducedPotential(SymbolPotential):
    pass


def induced_potential(scheme: InducingScheme, phi: BasePotential, sigma: float | None = None,
                      check_points: int = 3) -> SymbolPotential:
    """phi-bar = sum_{j < tau} phi o f^j, as a potential on the coding shift.

    Constant phi gives the exact depth-1 table c * tau. Otherwise words
    locate the cylinder representative that F^L maps to the centre of U.
    The variation constants are A = rho (2 delta)^alpha / (1 - sigma^alpha)
    and theta = sigma^alpha with delta the radius of U.
    """
    taus = scheme.taus
    if scheme.n_branches == 0:
        raise NoBranchesFound("scheme has no branches")
    sig = sigma if sigma is not None else (scheme.params.get("hyperbolic") or {}).get("sigma", 0.5)
    rho = phi.rho if np.isfinite(phi.rho) else 0.0
    alpha = phi.alpha
    theta = sig ** alpha
    A = rho * (2 * scheme.radius) ** alpha / (1 - theta)
    # every branch block must be finite at the ends and the middle of its cell
    U = np.linspace(0, 1, check_points)
    if scheme.map.dim == 1:
        pts = scheme.base[0, 0] + U * (scheme.base[0, 1] - scheme.base[0, 0])
    else:
        pts = scheme.base[:, 0] + np.outer(U, scheme.base[:, 1] - scheme.base[:, 0])
    for s, br in enumerate(scheme.branches):
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = scheme.block_sums(phi, np.full((len(pts), 1), s), pts)
        if not np.all(np.isfinite(vals)):
            raise PotentialUndefined("potential is singular on an inducing block", branch=s, tau=br.tau)
    desc = {"kind": "induced", "base": phi.description, "branches": scheme.n_branches}
    if phi.constant is not None:
        vals = phi.constant * taus.astype(float)
        return InducedPotential(lambda W: vals[W[:, 0]], 1, True, A, theta, phi.rho, alpha, None, desc)
    centre = scheme.centre

    def func(W):
        Uc = np.repeat(np.atleast_1d(np.asarray(centre, float))[None, :], len(W), axis=0)
        Uc = Uc[:, 0] if scheme.map.dim == 1 else Uc
        return scheme.block_sums(phi, W, Uc)

    return InducedPotential(func, 1, False, A, theta, phi.rho, alpha, None, desc)


def inducing_time_potential(scheme: InducingScheme) -> SymbolPotential:
    t = scheme.taus.astype(float)
    return SymbolPotential(lambda W: t[W[:, 0]], 1, True, description={"kind": "tau"})


def variation_estimate(sym_pot: SymbolPotential, scheme: InducingScheme, n: int, pair_samples: int = 200,
                       seed: int = 0, phi: BasePotential | None = None) -> dict:
    """Largest |phi-bar(x) - phi-bar(y)| over sampled pairs in common depth-n cylinders.

    Words are the extremal ones (any first symbol followed by the heaviest
    branch repeated) plus random words drawn by branch mass; each word is
    probed with random pairs and with the corners of U.
    """
    if n < 1:
        raise PreconditionViolation("depth n must be >= 1", n=n)
    if phi is None:
        raise PreconditionViolation("variation needs the base potential of the induced one")
    rng = np.random.default_rng(seed)
    k = scheme.n_branches
    heavy = int(np.argmax(scheme.masses))
    words = [np.array([s] + [heavy] * (n - 1)) for s in range(k)]
    p = scheme.masses / scheme.masses.sum()
    words += [rng.choice(k, size=n, p=p) for _ in range(max(1, pair_samples // 10))]
    W = np.array(words, dtype=np.int64)
    corners = scheme.u_corners()
    # pairs: corners against each other, plus random pairs
    reps = max(2, pair_samples // max(1, len(W)))
    worst = 0.0
    for r in range(reps + 1):
        if r == 0:
            Y = np.repeat(corners[:1], len(W), axis=0)
            Z = np.repeat(corners[-1:], len(W), axis=0)
        else:
            Y = scheme.u_samples(len(W), rng)
            Z = scheme.u_samples(len(W), rng)
        vy = scheme.block_sums(phi, W, Y)
        vz = scheme.block_sums(phi, W, Z)
        worst = max(worst, float(np.max(np.abs(vy - vz))))
    bound = sym_pot.A * sym_pot.theta ** n
    return {"n": n, "V_n": worst, "bound": bound, "pass": bool(worst <= bound * (1 + 1e-9) + 1e-15),
            "words": int(len(W))}


def code_orbit(scheme: InducingScheme, x, k: int) -> list[int]:
    """Symbols of F^i(x), i < k, where F is the induced map."""
    if k == 0:
        return []
    m = scheme.map
    P = m._as_points(x)
    word = []
    for i in range(k):
        s = _locate(scheme, P)
        if s is None:
            raise OrbitLeavesScheme("point lands outside the discovered branches", step=i,
                                    point=np.atleast_1d(P[0]).tolist())
        word.append(s)
        for lab in scheme.branches[s].word:
            P = m._lap_eval(int(lab), P)
    return word


def _locate(scheme: InducingScheme, P):
    m = scheme.map
    if m.dim == 1:
        x = float(P[0])
        for s, b in enumerate(scheme.branches):
            lo, hi = b.cell
            if lo <= x < hi or (x == hi and hi == scheme.base[0, 1]):
                return s
        return None
    for s, b in enumerate(scheme.branches):
        cur = P.copy()
        ok = True
        for lab in b.word:
            if int(m._label(cur)[0]) != lab:
                ok = False
                break
            cur = m._f(cur)
        if ok and np.all((cur[0] >= scheme.base[:, 0]) & (cur[0] <= scheme.base[:, 1])):
            return s
    return None


def tau_integral(scheme: InducingScheme, measure: CylinderMeasure, N: int | None = None) -> float:
    """Integral of min(tau, N) against the measure, normalized to a probability."""
    if measure.depth < 1:
        raise PreconditionViolation("measure must live on cylinders of depth >= 1")
    mm = measure.marginal(1)
    t = scheme.taus[mm.words[:, 0]].astype(float)
    if N is not None:
        t = np.minimum(t, N)
    return float(np.dot(t, mm.weights) / mm.total)

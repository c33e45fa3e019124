"""Hyperbolic times along orbits.

An iterate n is a hyperbolic time for x when, for every 1 <= k <= n,

    prod_{j=n-k}^{n-1} ||Df(x_j)^{-1}|| <= sigma^k   and
    dist_eps(x_{n-k}, C) >= sigma^(b k).

With a_j = -log inv_norm(x_j) - log sigma and S(n) = a_0 + ... + a_{n-1},
the product condition reads S(n) <= min_{m<n} S(m). With L = -log sigma the
recurrence condition reads n >= max_{j<n} (j + r_j), where
r_j = -log dist_eps(x_j) / (b L). Both reduce to running extrema, so a whole
orbit is scanned in O(n) and batches of orbits are scanned together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadParameters, BranchInversionFailure, OrbitHitsCriticalSet, PreconditionViolation
from .maps import DynamicalMap, NonDegeneracyData, OrbitStepper

LADDER = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0)
_TIE = 1e-12


@dataclass(frozen=True)
class HyperbolicParams:
    sigma: float
    epsilon: float = 0.0
    delta_ball: float = 0.1
    b_exponent: float | None = None

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise BadParameters("sigma must lie in (0, 1)", sigma=self.sigma)
        if self.epsilon < 0:
            raise BadParameters("epsilon must be >= 0", epsilon=self.epsilon)
        if not self.delta_ball > 0:
            raise BadParameters("delta_ball must be positive", delta_ball=self.delta_ball)

    def resolve_b(self, nd: NonDegeneracyData | None) -> float:
        if self.b_exponent is not None:
            return float(self.b_exponent)
        if nd is not None:
            return float(nd.b_exponent)
        return 1.0 / 3.0


@dataclass
class HyperbolicRecord:
    point: object
    horizon: int
    times: list[int] = field(default_factory=list)

    @property
    def frequency(self) -> float:
        return len(self.times) / self.horizon if self.horizon else 0.0

    def to_dict(self) -> dict:
        pt = np.atleast_1d(np.asarray(self.point, float)).tolist()
        return {"point": pt, "horizon": self.horizon, "times": list(self.times),
                "frequency": self.frequency}


def truncated_distance(dist: np.ndarray, epsilon: float) -> np.ndarray:
    """dist if dist < epsilon, else 1 (so epsilon = 0 gives 1 everywhere)."""
    return np.where(dist < epsilon, dist, 1.0)


def _scan(m: DynamicalMap, P0: np.ndarray, params: HyperbolicParams, b: float, n_max: int,
          keep_times: bool = True):
    """Streaming detection for a batch of starting points.

    Returns (times per point or None, counts, hit mask). Points whose orbit
    hits the critical set are flagged and stop accumulating.
    """
    batch = len(P0)
    log_sigma = np.log(params.sigma)
    L = -log_sigma
    S = np.zeros(batch)
    S_min = np.zeros(batch)          # min over m < n of S(m); S(0) = 0
    R = np.full(batch, -np.inf)      # max over j < n of j + r_j
    hit = np.zeros(batch, dtype=bool)
    counts = np.zeros(batch, dtype=np.int64)
    times = [[] for _ in range(batch)] if keep_times else None
    st = OrbitStepper(m, P0)
    P = st.points()
    for j in range(n_max):
        dist = m._dist_c(P)
        _, inv, _ = m._df(P)
        bad = (dist == 0.0) | (inv == 0.0) | m._singular(P) | ~np.isfinite(inv)
        hit |= bad
        with np.errstate(divide="ignore", invalid="ignore"):
            a = -np.log(np.where(bad, 1.0, inv)) - log_sigma
            de = truncated_distance(np.where(bad, 1.0, dist), params.epsilon)
            nl = -np.log(de)
        if b > 0:
            r = nl / (b * L)
        else:
            r = np.where(nl > _TIE, np.inf, 0.0)
        R = np.maximum(R, j + r)
        S = S + a
        n = j + 1
        ok = (S <= S_min + _TIE * (1.0 + np.abs(S_min))) & (n >= R - 1e-9) & ~hit
        S_min = np.minimum(S_min, S)
        if np.any(ok):
            counts += ok
            if keep_times:
                for i in np.flatnonzero(ok):
                    times[i].append(n)
        if j + 1 < n_max:
            # dead orbits stay finite (f is finite on C), they are just ignored
            P = st.advance()
    return times, counts, hit


def detect_hyperbolic_times(m: DynamicalMap, nd: NonDegeneracyData | None, x, params: HyperbolicParams,
                            n_max: int) -> HyperbolicRecord:
    """All n <= n_max that are (sigma, epsilon)-hyperbolic times for x."""
    if n_max < 0:
        raise BadParameters("n_max must be >= 0", n_max=n_max)
    P0 = m._as_points(x)
    b = params.resolve_b(nd)
    if n_max == 0:
        return HyperbolicRecord(x, 0, [])
    times, _, hit = _scan(m, P0, params, b, n_max)
    if hit[0]:
        raise OrbitHitsCriticalSet("orbit hits the critical set", point=np.atleast_1d(P0[0]).tolist())
    return HyperbolicRecord(x, n_max, times[0])


def brute_force_times(m: DynamicalMap, nd: NonDegeneracyData | None, x, params: HyperbolicParams,
                      n_max: int) -> list[int]:
    """Quadratic-time reference check of every (n, k) pair."""
    from .maps import orbit
    b = params.resolve_b(nd)
    orb = orbit(m, x, n_max)
    P = orb if m.dim == 1 else orb.reshape(-1, m.dim)
    inv = m._df(P)[1]
    dist = truncated_distance(m._dist_c(P), params.epsilon)
    out = []
    for n in range(1, n_max + 1):
        good = True
        for k in range(1, n + 1):
            prod = np.sum(-np.log(inv[n - k:n]))
            if prod > k * np.log(params.sigma) + 1e-12 * (1 + abs(prod)):
                good = False
                break
            if np.log(dist[n - k]) < b * k * np.log(params.sigma) - 1e-9 * b * -np.log(params.sigma):
                good = False
                break
        if good:
            out.append(n)
    return out


def lyapunov_sigma(m: DynamicalMap, x, n: int = 10_000) -> tuple[float, float]:
    """Birkhoff average lambda of log ||Df^-1||^-1 and sigma = exp(-lambda/4)."""
    st = OrbitStepper(m, m._as_points(x))
    total = 0.0
    P = st.points()
    for _ in range(n):
        inv = m._df(P)[1]
        total += float(np.log(inv[0]))
        P = st.advance()
    lam = total / n
    return lam, float(np.exp(-lam / 4.0))


def _chunks(n: int, jobs: int):
    bounds = np.linspace(0, n, max(1, jobs) + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _frequency_worker(args):
    m, P, params, b, n = args
    _, counts, hit = _scan(m, P, params, b, n, keep_times=False)
    return counts, hit


def frequency_field(m: DynamicalMap, nd: NonDegeneracyData | None, params: HyperbolicParams,
                    grid: Sequence, n: int, jobs: int = 1) -> dict:
    """Hyperbolic-time counts over a grid of starting points.

    Returns ``{"rows": [...], "summary": {...}}``. Orbits that hit the
    critical set are skipped and counted. Results do not depend on ``jobs``.
    """
    if n < 1:
        raise BadParameters("n must be >= 1", n=n)
    G = np.asarray(grid, float)
    if G.size == 0:
        return {"rows": [], "summary": {"points": 0, "skipped": 0,
                                        "fraction_at_least": {str(t): 0.0 for t in LADDER}}}
    G = m._as_points(G)
    b = params.resolve_b(nd)
    parts = _chunks(len(G), jobs)
    if jobs > 1 and len(parts) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            res = list(ex.map(_frequency_worker, [(m, G[a:z], params, b, n) for a, z in parts]))
    else:
        res = [_frequency_worker((m, G[a:z], params, b, n)) for a, z in parts]
    counts = np.concatenate([r[0] for r in res])
    hit = np.concatenate([r[1] for r in res])
    rows = []
    for i in range(len(G)):
        if hit[i]:
            continue
        rows.append({"coords": np.atleast_1d(G[i]).tolist(), "horizon": n,
                     "hyperbolic_count": int(counts[i]), "frequency": counts[i] / n})
    freqs = np.array([r["frequency"] for r in rows])
    summary = {"points": len(rows), "skipped": int(hit.sum()),
               "fraction_at_least": {str(t): (float(np.mean(freqs >= t)) if len(freqs) else 0.0)
                                     for t in LADDER}}
    return {"rows": rows, "summary": summary}


# ---------------------------------------------------------------------------
# pre-balls

def _pullback_chain(m: DynamicalMap, labels: Sequence[int], Q: np.ndarray):
    """Pull points back along the lap labels of x_0 .. x_{n-1}.

    Returns an array of shape (n+1, batch[, dim]) whose row j holds the
    preimages lying near x_j (row n is Q itself). Raises
    BranchInversionFailure with the offending step.
    """
    n = len(labels)
    chain = [None] * (n + 1)
    chain[n] = Q
    cur = Q
    for j in range(n - 1, -1, -1):
        cur, valid = m._inverse(int(labels[j]), cur)
        if not np.all(valid):
            raise BranchInversionFailure("pre-ball leaves the lap image", j=n - j, step=j)
        chain[j] = cur
    return np.array(chain)


def _ball_samples(m: DynamicalMap, centre, radius: float, count: int, rng) -> np.ndarray:
    if m.dim == 1:
        lo, hi = m.phase_space[0]
        pts = centre + radius * (2 * rng.random(count) - 1)
        ends = np.array([centre - radius, centre + radius])
        pts = np.concatenate([ends, pts])
        if m.circle_multiplier is None:
            pts = np.clip(pts, lo, hi)
        else:
            pts = np.mod(pts, 1.0)
        return pts
    ang = rng.random(count) * 2 * np.pi
    rad = radius * np.sqrt(rng.random(count))
    pts = np.asarray(centre, float)[None, :] + np.column_stack([np.cos(ang), np.sin(ang)]) * rad[:, None]
    pts[:, 0] = np.mod(pts[:, 0], 1.0)
    b = m.phase_space[1]
    pts[:, 1] = np.clip(pts[:, 1], b[0], b[1])
    return pts


def pre_ball_check(m: DynamicalMap, nd: NonDegeneracyData | None, x, n: int, params: HyperbolicParams,
                   pair_samples: int = 100, rho: float | None = None, seed: int = 0,
                   record: HyperbolicRecord | None = None) -> dict:
    """Backward contraction and distortion on the pre-ball of a hyperbolic time.

    Pairs (y, z) are drawn in B_delta(f^n x), pulled back along the branch of
    x, and checked against dist(y_{n-j}, z_{n-j}) <= sigma^{j/2} dist(y_n, z_n)
    for 1 <= j <= n. The distortion ratio is
    |log|det Df^n(y_0)| - log|det Df^n(z_0)|| / dist(y_n, z_n).
    """
    rec = record or detect_hyperbolic_times(m, nd, x, params, n)
    if n not in rec.times:
        raise PreconditionViolation("n is not a detected hyperbolic time", n=n)
    from .maps import orbit
    orb = orbit(m, x, n)
    P = orb if m.dim == 1 else orb.reshape(-1, m.dim)
    labels = m._label(P[:n])
    rng = np.random.default_rng(seed)
    Y = _ball_samples(m, P[n], params.delta_ball, pair_samples, rng)
    Z = _ball_samples(m, P[n], params.delta_ball, pair_samples, rng)
    if m.dim == 1:
        # the two ends of the ball as one extra pair
        Y = np.concatenate([Y, [Y[0]]])
        Z = np.concatenate([Z, [Y[1]]])
    chY = _pullback_chain(m, labels, Y)
    chZ = _pullback_chain(m, labels, Z)
    base = m.distance(chY[n], chZ[n])
    use = base > 0
    worst = 0.0
    worst_j = None
    for j in range(1, n + 1):
        dj = m.distance(chY[n - j], chZ[n - j])
        ratio = np.max(dj[use] / (params.sigma ** (j / 2.0) * base[use])) if np.any(use) else 0.0
        if ratio > worst:
            worst, worst_j = float(ratio), j
    # distortion along the chain
    flat = lambda C: C.reshape(-1) if m.dim == 1 else C.reshape(-1, m.dim)  # noqa: E731
    detY = np.abs(m._df(flat(chY[:n]))[2]).reshape(n, -1)
    detZ = np.abs(m._df(flat(chZ[:n]))[2]).reshape(n, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog = np.abs(np.sum(np.log(detY) - np.log(detZ), axis=0))
    dist_ratio = float(np.max(dlog[use] / base[use])) if np.any(use) else 0.0
    if m.dim == 1:
        ends = chY[0][:2]
        radius = 0.5 * float(abs(ends[1] - ends[0]))
    else:
        radius = float(np.max(m.distance(chY[0], np.broadcast_to(P[0], chY[0].shape))))
    contraction_ok = worst <= 1.0 + 1e-9
    distortion_ok = True if rho is None else dist_ratio <= rho
    return {"pass": bool(contraction_ok and distortion_ok), "n": n,
            "pre_ball_radius": radius, "worst_contraction_ratio": worst,
            "worst_contraction_j": worst_j, "distortion_ratio": dist_ratio,
            "rho": rho, "pairs": int(use.sum())}


def calibrate_distortion(m: DynamicalMap, nd: NonDegeneracyData | None, points: Sequence,
                         params: HyperbolicParams, n_max: int, pair_samples: int = 50,
                         margin: float = 1.5, seed: int = 0) -> float:
    """Largest observed distortion ratio over detected times, times ``margin``."""
    worst = 0.0
    for i, x in enumerate(points):
        rec = detect_hyperbolic_times(m, nd, x, params, n_max)
        for n in rec.times:
            try:
                r = pre_ball_check(m, nd, x, n, params, pair_samples, seed=seed + i, record=rec)
            except BranchInversionFailure:
                continue
            worst = max(worst, r["distortion_ratio"])
    return margin * worst

"""Pressure on the base system, normalization, Abramov projection and
equilibrium states, the Viana hyperbolic potential, and the finiteness-gap
formulas for the modified potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import (EmptySample, GeometryViolated, NonIntegrableTau, NonPositiveIntegral,
                     OrbitHitsCriticalSet, PreconditionViolation, ThermoBadParameters, ThermoError)
from .hyperbolic import HyperbolicParams, frequency_field, lyapunov_sigma
from .inducing import InducingScheme, _pull, induced_potential
from .maps import DynamicalMap, NonDegeneracyData, OrbitStepper, VianaMap, trajectory
from .potentials import BasePotential, constant
from .shift import CylinderMeasure, GibbsSolution, ShiftSpace, SymbolPotential, rpf_solve

__all__ = [
    "BasePotential", "PressureEstimate", "ProjectedMeasure", "birkhoff_average", "caratheodory_pressure",
    "normalize_potential", "abramov_project", "equilibrium_state", "viana_hyperbolic_potential",
    "finiteness_gap", "sharp_p_form", "choose_gamma", "VIANA_DEFAULT_BOX",
]


def _as_potential(phi) -> BasePotential:
    if phi is None:
        return constant(0.0)
    if isinstance(phi, BasePotential):
        return phi
    if isinstance(phi, (int, float)):
        return constant(float(phi))
    return BasePotential(phi, np.inf, 1.0, None, {"kind": "callable"})


# ---------------------------------------------------------------------------
# Birkhoff averages

def birkhoff_average(m: DynamicalMap, g, x, n: int) -> float:
    """S_n g(x) / n along the orbit x, f(x), ..., f^{n-1}(x)."""
    if n < 1:
        raise PreconditionViolation("n must be >= 1", n=n)
    g = _as_potential(g)
    if g.constant is not None:
        return float(g.constant)
    X = trajectory(m, x, n - 1)
    dc = m._dist_c(X)
    if np.any(dc == 0.0):
        step = int(np.argmax(dc == 0.0))
        raise OrbitHitsCriticalSet("orbit lands on the critical set", step=step)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = g(X)
    if not np.all(np.isfinite(vals)):
        raise OrbitHitsCriticalSet("observable is not finite along the orbit",
                                   step=int(np.argmax(~np.isfinite(vals))))
    if np.all(vals == vals[0]):
        return float(vals[0])
    return math.fsum(vals.tolist()) / n


def log_jacobian(m: DynamicalMap) -> BasePotential:
    """log |det Df|, the observable whose SRB average is the entropy."""
    def f(P):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(m._df(np.asarray(P, float))[2]))
    return BasePotential(f, np.inf, 1.0, None, {"kind": "log_jacobian"})


# ---------------------------------------------------------------------------
# Caratheodory pressure

@dataclass
class PressureEstimate:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ThermoError("pressure estimate is not finite", method=self.method)

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "diagnostics": self.diagnostics, "note": self.note}


def _greedy_groups(D: np.ndarray, order: np.ndarray, width: float) -> list[np.ndarray]:
    """Split the sample into sets of dynamical diameter < width.

    Points are visited in ``order``; each uncovered point opens a group and
    absorbs later uncovered points as long as the diameter stays below width.
    """
    M = len(order)
    rank = np.empty(M, dtype=np.int64)
    rank[order] = np.arange(M)
    covered = np.zeros(M, dtype=bool)
    groups = []
    for s in order:
        if covered[s]:
            continue
        cand = np.flatnonzero((~covered) & (D[s] < width) & (rank > rank[s]))
        cand = cand[np.argsort(rank[cand])]
        members = [s]
        worst = D[s].copy()
        for t in cand:
            if worst[t] < width:
                members.append(t)
                np.maximum(worst, D[t], out=worst)
        members = np.array(members)
        covered[members] = True
        groups.append(members)
    return groups


def caratheodory_pressure(m: DynamicalMap, phi, sample, delta: float, N: int = 0, budget: int = 40,
                          min_group: float = 4.0, max_points: int = 4000) -> PressureEstimate:
    """Sample estimate of the relative pressure P_f(phi, Lambda, delta).

    At each level n the sample is covered greedily by sets whose orbits stay
    within 2 delta of each other for 0 <= i <= n, the sample version of
    dynamical balls B_delta(y, n) with free centres. Each set contributes
    exp(-gamma n + R) with R the largest S_n phi over its points. The
    estimate is the gamma at which the level masses neither grow nor decay,
    i.e. the least-squares slope of log sum exp(R) against n, over levels
    n >= N whose sets still hold ``min_group`` points on average (past that
    the finite sample saturates). ``budget`` caps the number of levels.

    This is an estimate with diagnostics, not a certified bound.
    """
    P = m._as_points(sample)
    M = len(P)
    if M == 0:
        raise EmptySample("empty sample set")
    if not delta > 0:
        raise PreconditionViolation("delta must be positive", delta=delta)
    if M > max_points:
        raise PreconditionViolation("sample too large for pairwise covers", points=M, max_points=max_points)
    phi = _as_potential(phi)
    order = np.lexsort(P.T[::-1]) if m.dim > 1 else np.argsort(P, kind="stable")
    st = OrbitStepper(m, P)
    cur = st.points().copy()
    D = m.distance(cur[:, None], cur[None, :])
    S = np.zeros(M)
    rows = []
    for n in range(0, budget + 1):
        if n > 0:
            S = S + phi(cur)
            cur = st.advance().copy()
            np.maximum(D, m.distance(cur[:, None], cur[None, :]), out=D)
        if n < N:
            continue
        # open balls: near-ties count as outside so rounding cannot widen a set
        groups = _greedy_groups(D, order, 2.0 * delta * (1.0 - 1e-9))
        R = np.array([S[g].max() for g in groups])
        size = M / len(groups)
        rows.append({"n": n, "cover_size": len(groups), "mean_group": size,
                     "log_mass": float(logsumexp(R))})
        if size < min_group:
            break
    used = [r for r in rows if r["mean_group"] >= min_group]
    if len(used) < 2:
        raise PreconditionViolation("sample too sparse for delta: fewer than two unsaturated levels",
                                    points=M, delta=delta, levels=rows)
    ns = np.array([r["n"] for r in used], float)
    ys = np.array([r["log_mass"] for r in used])
    slope, icpt = np.polyfit(ns, ys, 1)
    resid = float(np.max(np.abs(ys - (slope * ns + icpt))))
    for r in rows:
        r["log_m_at_estimate"] = r["log_mass"] - slope * r["n"]
    diag = {"points": M, "delta": delta, "N": N, "levels_used": [int(v) for v in ns],
            "fit_residual": resid, "rows": rows}
    return PressureEstimate(float(slope), "caratheodory", diag,
                            "greedy sample cover; growth rate of level masses; not a certified bound")


# ---------------------------------------------------------------------------
# normalization

def _grid_sample(m: DynamicalMap, count: int) -> np.ndarray:
    b = m.phase_space
    if m.dim == 1:
        return b[0, 0] + (b[0, 1] - b[0, 0]) * np.arange(count) / count
    k = max(2, int(round(math.sqrt(count))))
    t = b[0, 0] + (b[0, 1] - b[0, 0]) * np.arange(k) / k
    x = b[1, 0] + (b[1, 1] - b[1, 0]) * (np.arange(k) + 0.5) / k
    T, X = np.meshgrid(t, x, indexing="ij")
    return np.column_stack([T.ravel(), X.ravel()])


def _log_lambda(pot: SymbolPotential, n_symbols: int, depth: int | None = None) -> float:
    if pot.exact and pot.depth == 1 and (depth is None or depth == 1):
        # full shift, depth-1 weights: lambda = sum_i exp(Phi_i)
        return float(logsumexp(pot(np.arange(n_symbols, dtype=np.int64)[:, None])))
    return rpf_solve(ShiftSpace(n_symbols), pot, depth=depth, gibbs_depth=0).log_lambda


def _cached(pot: SymbolPotential) -> SymbolPotential:
    cache: dict = {}
    f = pot.func

    def g(W):
        key = (W.shape, W.tobytes())
        if key not in cache:
            cache[key] = np.asarray(f(W), float)
        return cache[key]
    return SymbolPotential(g, pot.depth, pot.exact, pot.A, pot.theta, pot.rho, pot.alpha,
                           pot.tail_mass, pot.description)


def variational_pressure(scheme: InducingScheme, phi: BasePotential, N: int | None = None,
                         depth: int | None = None) -> PressureEstimate:
    """The P solving P_G(phi-bar - P tau) = 0 on the first N branches."""
    sch = scheme.truncated(N) if N else scheme
    Phi = _cached(induced_potential(sch, phi))
    t = sch.taus.astype(float)
    k = sch.n_branches

    def F(p):
        pot = SymbolPotential(lambda W: Phi.func(W) - p * t[W[:, 0]], Phi.depth, Phi.exact,
                              Phi.A, Phi.theta, description={"kind": "shifted"})
        return _log_lambda(pot, k, depth)

    F0 = F(0.0)
    if F0 == 0.0:
        root = 0.0
    else:
        ends = sorted([F0, F0 / t.max()])
        lo, hi = ends[0] - 1e-9 - 1e-9 * abs(ends[0]), ends[1] + 1e-9 + 1e-9 * abs(ends[1])
        root = brentq(F, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    diag = {"truncation": k, "completeness_mass": sch.completeness_mass, "tau_max": int(t.max()),
            "defect": abs(F(root)), "depth": depth or Phi.depth}
    return PressureEstimate(float(root), "variational_truncation", diag,
                            "zero of the truncated Gurevich pressure of phi-bar - P tau")


def normalize_potential(m: DynamicalMap, phi, pressure_source="caratheodory",
                        **options) -> tuple[BasePotential, PressureEstimate]:
    """Return phi - P-hat together with the pressure estimate used.

    ``pressure_source`` is a number, ``"caratheodory"`` (options: sample,
    delta, N, budget), ``"variational_truncation"`` (options: scheme, N,
    depth) or ``"birkhoff"`` (options: x, n, seed; the free energy of the
    SRB proxy orbit, a lower-flavor estimate).
    """
    phi = _as_potential(phi)
    if isinstance(pressure_source, (int, float)) and not isinstance(pressure_source, bool):
        est = PressureEstimate(float(pressure_source), "given")
    elif pressure_source == "caratheodory":
        sample = options.get("sample")
        if sample is None:
            sample = _grid_sample(m, options.get("sample_size", 200))
        est = caratheodory_pressure(m, phi, sample, options.get("delta", 0.05), options.get("N", 0),
                                    options.get("budget", 40))
    elif pressure_source == "variational_truncation":
        scheme = options.get("scheme")
        if scheme is None:
            raise PreconditionViolation("variational_truncation needs an inducing scheme")
        est = variational_pressure(scheme, phi, options.get("N"), options.get("depth"))
    elif pressure_source == "birkhoff":
        rng = np.random.default_rng(options.get("seed", 0))
        x = options.get("x")
        if x is None:
            x = m.sample(1, rng)[0]
        n = options.get("n", 100_000)
        val = birkhoff_average(m, lambda P: log_jacobian(m)(P) + phi(P), x, n)
        est = PressureEstimate(val, "birkhoff", {"orbit_length": n, "x": np.atleast_1d(x).tolist()},
                               "free energy of a typical orbit; lower-flavor estimate")
    else:
        raise PreconditionViolation("unknown pressure source", source=str(pressure_source))
    out = phi.shifted(-est.value)
    out.description["normalized_by"] = est.value
    return out, est


# ---------------------------------------------------------------------------
# Abramov projection

@dataclass
class ProjectedMeasure:
    """Tower image of an induced measure: branch i at level j < tau_i has
    weight mu-bar(P_i) / int tau, carried by f^j(P_i)."""

    scheme: InducingScheme
    branch_weights: np.ndarray        # mu-bar(P_i), normalized
    tau_integral: float
    log_lambda: float
    int_phi_bar: float
    h_bar: float
    tail_estimate: float = 0.0

    @property
    def h_mu(self) -> float:
        return self.h_bar / self.tau_integral

    @property
    def int_phi(self) -> float:
        return self.int_phi_bar / self.tau_integral

    @property
    def free_energy(self) -> float:
        return self.h_mu + self.int_phi

    def tower_weights(self) -> list[tuple[int, int, float]]:
        out = []
        for i, (w, t) in enumerate(zip(self.branch_weights, self.scheme.taus)):
            out += [(i, j, float(w / self.tau_integral)) for j in range(int(t))]
        return out

    @property
    def total(self) -> float:
        return float(np.dot(self.branch_weights, self.scheme.taus) / self.tau_integral)

    def sample(self, count: int, rng) -> np.ndarray:
        """Points f^j(y), y in P_i, with (i, j) drawn from the tower weights.

        Within a branch y is the pullback of a uniform point of U, so the
        sample follows mu only up to the distortion inside each cell.
        """
        t = self.scheme.taus
        p = self.branch_weights * t
        p = p / p.sum()
        idx = rng.choice(len(p), size=count, p=p)
        lev = np.floor(rng.random(count) * t[idx]).astype(np.int64)
        U = self.scheme.u_samples(count, rng)
        out = np.array(U, float, copy=True)
        for i in np.unique(idx):
            rows = np.flatnonzero(idx == i)
            _, chain, _ = _pull(self.scheme.map, self.scheme.branches[i].word, U[rows], keep_chain=True)
            out[rows] = np.stack(chain)[lev[rows], np.arange(len(rows))]
        return out

    def to_dict(self) -> dict:
        return {"tau_integral": self.tau_integral, "h_mu": self.h_mu, "int_phi": self.int_phi,
                "free_energy": self.free_energy, "h_bar": self.h_bar, "int_phi_bar": self.int_phi_bar,
                "log_lambda": self.log_lambda, "total_mass": self.total,
                "branch_weights": self.branch_weights.tolist(), "tail_estimate": self.tail_estimate}


def _tau_tail(taus: np.ndarray, p: np.ndarray) -> float:
    """Extrapolated int (tau - tau_max)^+ beyond the cutoff.

    The increments P(tau >= k) of the truncated integrals are fitted with a
    geometric rate over the last quarter of the tau range.
    """
    levels = np.unique(taus)
    if len(levels) < 3:
        return 0.0
    tmax = int(levels[-1])
    inc = np.array([p[taus >= k].sum() for k in range(1, tmax + 1)])
    span = max(1, tmax // 4)
    a, b = inc[tmax - 1 - span], inc[tmax - 1]
    if a <= 0 or b <= 0:
        return 0.0
    r = (b / a) ** (1.0 / span)
    return float("inf") if r >= 1.0 else float(b * r / (1.0 - r))


def abramov_project(scheme: InducingScheme, mu_bar: CylinderMeasure, phi: BasePotential | None,
                    sol: GibbsSolution, tol: float = 1e-2) -> ProjectedMeasure:
    """Project an induced Gibbs measure: h = h-bar / int tau and
    int phi = int phi-bar / int tau, with h-bar = log lambda - int phi-bar.

    ``phi`` is kept for provenance; phi-bar is ``sol.potential``.
    """
    mm = mu_bar.marginal(1)
    if mm.total <= 0:
        raise ThermoError("measure has no mass")
    p = np.zeros(scheme.n_branches)
    p[mm.words[:, 0]] = mm.weights / mm.total
    taus = scheme.taus
    T = float(np.dot(p, taus))
    tail = _tau_tail(taus, p)
    if not np.isfinite(T) or tail > tol * T:
        raise NonIntegrableTau("truncated tau integrals still growing at the cutoff", tau_integral=T,
                               tail_estimate=tail, tau_max=int(taus.max()))
    pot = sol.potential
    d = max(pot.depth, sol.depth) if not pot.exact else pot.depth
    if mu_bar.depth >= d:
        vals = pot(mu_bar.words[:, :d]) if pot.exact else pot(mu_bar.words)
        int_bar = float(np.dot(vals, mu_bar.weights) / mu_bar.total)
    else:
        int_bar = sol.integral()
    h_bar = sol.log_lambda - int_bar
    if h_bar < -1e-9:
        raise ThermoError("negative induced entropy", h_bar=h_bar)
    return ProjectedMeasure(scheme, p, T, sol.log_lambda, int_bar, h_bar, tail)


def equilibrium_state(m: DynamicalMap, phi, scheme: InducingScheme, N: int | None = None,
                      depth: int | None = None, params: HyperbolicParams | None = None,
                      nd: NonDegeneracyData | None = None, support_samples: int = 200, horizon: int = 1000,
                      seed: int = 0, jobs: int = 1) -> tuple[ProjectedMeasure, dict]:
    """induced_potential -> rpf_solve -> abramov_project, with a report.

    The report carries the free energy h + int phi, its defect from 0 and
    the share of support samples with positive hyperbolic-time frequency.
    """
    phi = _as_potential(phi)
    sch = scheme.truncated(N) if N else scheme
    Phi = induced_potential(sch, phi)
    sol = rpf_solve(ShiftSpace(sch.n_branches), Phi, depth=depth)
    mu_bar = sol.measure()
    proj = abramov_project(sch, mu_bar, phi, sol)
    if params is None:
        hp = sch.params.get("hyperbolic") or {}
        if hp:
            params = HyperbolicParams(hp["sigma"], hp.get("epsilon", 0.0), hp.get("delta_ball", 0.1))
        else:
            _, sig = lyapunov_sigma(m, m.sample(1, np.random.default_rng(seed))[0])
            params = HyperbolicParams(sig if 0 < sig < 1 else 0.5)
    rng = np.random.default_rng(seed)
    pts = proj.sample(support_samples, rng) if support_samples else np.empty(0)
    diag = {"branches": sch.n_branches, "depth": sol.depth, "completeness_mass": sch.completeness_mass,
            "iterations": sol.iterations, "residual": sol.residual, "tail_estimate": proj.tail_estimate}
    if support_samples:
        field_ = frequency_field(m, nd, params, pts, horizon, jobs=jobs)
        freqs = np.array([r["frequency"] for r in field_["rows"] if r["frequency"] is not None])
        frac = float(np.mean(freqs > 0)) if len(freqs) else 0.0
        diag.update({"support_samples": int(len(pts)), "horizon": horizon,
                     "positive_frequency_fraction": frac, "expanding": bool(frac >= 0.95),
                     "mean_frequency": float(freqs.mean()) if len(freqs) else None,
                     "sigma": params.sigma, "epsilon": params.epsilon})
    report = {"free_energy": proj.free_energy, "h_mu": proj.h_mu, "int_phi": proj.int_phi,
              "tau_integral": proj.tau_integral, "lambda": sol.lam, "K": sol.K,
              "defect": abs(proj.free_energy), "diagnostics": diag}
    return proj, report


# ---------------------------------------------------------------------------
# Viana hyperbolic potential

VIANA_DEFAULT_BOX = ((0.25, 0.30), (-0.6, -0.5))


def _bump(kind, box):
    (t0, t1), (x0, x1) = box
    tc, xc, tw, xw = (t0 + t1) / 2, (x0 + x1) / 2, (t1 - t0) / 2, (x1 - x0) / 2
    if callable(kind):
        return kind, None
    if kind == "zero":
        return (lambda P: np.zeros(len(P))), 0.0
    if kind != "cosine":
        raise PreconditionViolation("unknown bump", bump=str(kind))

    def f(P):
        u = np.clip((P[:, 0] - tc) / tw, -1, 1)
        v = np.clip((P[:, 1] - xc) / xw, -1, 1)
        return np.cos(0.5 * np.pi * u) ** 2 * np.cos(0.5 * np.pi * v) ** 2
    lip = 0.5 * np.pi * math.hypot(1 / tw, 1 / xw)
    return f, lip


def viana_hyperbolic_potential(m: VianaMap, box=VIANA_DEFAULT_BOX, bump="cosine", L: int = 1_000_000,
                               pressure_hc: float | None = None, c_hat: float = 1.5, claim_orbits: int = 100,
                               claim_length: int = 1000, geometry_samples: int = 200, seed: int = 0,
                               hc_sample: int = 400, hc_delta: float = 0.25,
                               ) -> tuple[BasePotential, dict]:
    """phi = k phi0 with phi0 = bump on B, -bump o f on V = f^{-1}(B), 0 elsewhere.

    int phi0 dmu is estimated as the orbit average of 1_V (bump o f)(|det Df| - 1)
    along one long orbit from a seeded Lebesgue-typical start, and
    k = c_hat * P_{H^c}(0) / estimate. ``pressure_hc`` overrides the
    Caratheodory estimate of P_{H^c}(0) on the least hyperbolic sample points.
    """
    if not isinstance(m, VianaMap):
        raise PreconditionViolation("the construction is for the skew product family")
    (t0, t1), (x0, x1) = box
    ps = m.phase_space
    if not (ps[0, 0] <= t0 < t1 <= ps[0, 1] and ps[1, 0] <= x0 < x1 <= ps[1, 1]):
        raise GeometryViolated("box leaves the phase space", box=[list(box[0]), list(box[1])])
    phiB, lipB = _bump(bump, box)

    def in_B(P):
        return (P[:, 0] > t0) & (P[:, 0] < t1) & (P[:, 1] > x0) & (P[:, 1] < x1)

    # geometry: V cap B and V cap C on samples
    g = geometry_samples
    tt = t0 + (t1 - t0) * (np.arange(g) + 0.5) / g
    xx = x0 + (x1 - x0) * (np.arange(g) + 0.5) / g
    TT, XX = np.meshgrid(tt, xx, indexing="ij")
    Bpts = np.column_stack([TT.ravel(), XX.ravel()])
    hits_B = Bpts[in_B(m._f(Bpts))]
    crit = np.column_stack([(np.arange(g * g) + 0.5) / (g * g), np.zeros(g * g)])
    hits_C = crit[in_B(m._f(crit))]
    geometry = {"box_samples": int(len(Bpts)), "critical_samples": int(len(crit)),
                "V_meets_B": int(len(hits_B)), "V_meets_C": int(len(hits_C))}
    if len(hits_B) or len(hits_C):
        raise GeometryViolated("V = f^-1(B) meets B or the critical set on samples",
                               witness=(hits_B[:1] if len(hits_B) else hits_C[:1]).tolist(), **geometry)

    def phi0(P):
        P = np.asarray(P, float).reshape(-1, 2)
        out = np.where(in_B(P), phiB(P), 0.0)
        F = m._f(P)
        return out - np.where(in_B(F), phiB(F), 0.0)

    # SRB proxy orbit
    rng = np.random.default_rng(seed)
    start = m.sample(1, rng)[0]
    X = trajectory(m, start, L)
    Xc, Xn = X[:-1], X[1:]
    inV = in_B(Xn)
    det = np.abs(m._df(Xc[inV])[2])
    integrand = phiB(Xn[inV]) * (det - 1.0)
    estimate = math.fsum(integrand.tolist()) / L
    direct = math.fsum(phi0(Xc).tolist()) / L
    if not estimate > 0:
        raise NonPositiveIntegral("orbit estimate of the integral is not positive", estimate=estimate,
                                  visits=int(inV.sum()), L=L)

    # P_{H^c}(0) from the least hyperbolic sample points
    hc_diag = {}
    if pressure_hc is None:
        lam_, sig = lyapunov_sigma(m, start)
        params = HyperbolicParams(sig, 0.01, 0.1)
        cand = m.sample(4 * hc_sample, rng)
        fld = frequency_field(m, None, params, cand, 300)
        freq = np.array([r["frequency"] if r["frequency"] is not None else 0.0 for r in fld["rows"]])
        pick = cand[np.argsort(freq, kind="stable")[:hc_sample]]
        est = caratheodory_pressure(m, None, pick, hc_delta, 0, 20, min_group=2.0)
        pressure_hc = est.value
        hc_diag = {"method": "caratheodory", "sample": int(len(pick)), "delta": hc_delta,
                   "max_frequency_in_sample": float(np.sort(freq)[hc_sample - 1]), "estimate": est.to_dict()}
    if not pressure_hc > 0:
        raise NonPositiveIntegral("pressure estimate on the complement must be positive", pressure_hc=pressure_hc)
    k = c_hat * pressure_hc / estimate

    def phi(P):
        return k * phi0(P)

    Bpts_vals = phiB(Bpts)
    sup_b, inf_b = float(max(Bpts_vals.max(), 0.0)), 0.0
    theta = k * (sup_b - inf_b)
    # the Claim: S_n phi <= theta along sampled orbits
    worst = -np.inf
    # half the orbits start inside B, where the bound is approached
    nb = claim_orbits // 2
    starts = m.sample(claim_orbits, rng)
    starts[:nb] = np.column_stack([t0 + (t1 - t0) * rng.random(nb), x0 + (x1 - x0) * rng.random(nb)])
    st = OrbitStepper(m, starts)
    Ssum = np.zeros(claim_orbits)
    cur = st.points().copy()
    for _ in range(claim_length):
        Ssum += phi(cur)
        worst = max(worst, float(Ssum.max()))
        cur = st.advance().copy()
    rho = k * lipB * max(1.0, float(np.max(np.abs(np.linalg.svd(
        np.array([[m.d, 0.0], [0.0, 2 * m.iota]]), compute_uv=False))))) if lipB is not None else np.inf
    pot = BasePotential(phi, rho, 1.0, None, {"kind": "viana_hyperbolic", "box": [list(box[0]), list(box[1])],
                                              "bump": bump if isinstance(bump, str) else "callable", "k": k})
    cert = {"integral_estimate": estimate, "direct_phi0_average": direct, "L": L, "visits_V": int(inV.sum()),
            "pressure_hc": pressure_hc, "pressure_hc_diagnostics": hc_diag, "c_hat": c_hat, "k": k,
            "theta_bound": theta, "claim_max_Sn": worst, "claim_orbits": claim_orbits,
            "claim_length": claim_length, "claim_pass": bool(worst <= theta + 1e-12), "geometry": geometry,
            "start": start.tolist()}
    return pot, cert


# ---------------------------------------------------------------------------
# finiteness gap

def finiteness_gap(K: float, lam: float, gamma: float, n: int, m_Cn: float, mu_Cn: float,
                   reading: str = "B") -> dict:
    """delta-flat, delta-sharp and gamma-sharp for a cylinder of depth n.

    Reading A uses (1 - m)^n in the delta-flat denominator, reading B uses
    1 - m^n; both values are returned, the selected one under ``delta_flat``.
    """
    for name, v in (("K", K), ("lam", lam), ("gamma", gamma), ("m_Cn", m_Cn), ("mu_Cn", mu_Cn)):
        if not np.isfinite(v):
            raise ThermoBadParameters(f"{name} must be finite", **{name: v})
    if not K >= 1:
        raise ThermoBadParameters("K must be >= 1", K=K)
    if not 0 < gamma < 1:
        raise ThermoBadParameters("gamma must lie in (0, 1)", gamma=gamma)
    if not (0 < m_Cn < 1 and 0 < mu_Cn < 1):
        raise ThermoBadParameters("cylinder masses must lie in (0, 1)", m_Cn=m_Cn, mu_Cn=mu_Cn)
    if int(n) != n or n < 1:
        raise ThermoBadParameters("n must be an integer >= 1", n=n)
    if reading not in ("A", "B"):
        raise ThermoBadParameters("reading must be A or B", reading=reading)
    n = int(n)
    lg = math.log1p(-gamma)
    head = math.log1p(-gamma * m_Cn)
    den = {"A": math.exp(n * math.log1p(-m_Cn)), "B": -math.expm1(n * math.log(m_Cn))}
    flat = {r: head - K * (1 - gamma) * lg * mu_Cn / den[r] for r in "AB"}
    odds = gamma / (1 - gamma)
    sharp = m_Cn * odds + lg * mu_Cn / (K * (1 - gamma) * (1 + m_Cn * odds) ** n)
    gsharp = 1 - (1 - gamma) * (1 + math.exp(-lam * n) * odds) ** n
    return {"delta_flat": flat[reading], "delta_flat_A": flat["A"], "delta_flat_B": flat["B"],
            "delta_sharp": sharp, "gamma_sharp": gsharp, "reading": reading,
            "flat_negative": flat[reading] < 0, "sharp_negative": sharp < 0,
            "gamma_sharp_in_unit": 0 < gsharp < 1,
            "inputs": {"K": K, "lam": lam, "gamma": gamma, "n": n, "m_Cn": m_Cn, "mu_Cn": mu_Cn}}


def sharp_p_form(K: float, lam: float, p: float, n: int, m_Cn: float) -> float:
    """delta-sharp written with gamma = p / (p + 1) and m = e^{-lam n}."""
    return m_Cn * (p + 1) * (p / (p + 1) - math.log1p(p) / (K * (1 + p * math.exp(-lam * n)) ** n))


def choose_gamma(K: float, lam: float, flavor: str, ns=range(1, 11), reading: str = "B",
                 grid: int = 2000) -> tuple[float, float]:
    """Grid-search gamma in (0, 1) maximizing the worst margin over n, with
    m = mu = e^{-lam n}. Returns (gamma, worst value); worst < 0 means the
    sign requirements hold for every n."""
    best = (None, np.inf)
    for g in (np.arange(1, grid) / grid):
        worst = -np.inf
        for n in ns:
            mm = math.exp(-lam * n)
            r = finiteness_gap(K, lam, g, n, mm, mm, reading)
            if flavor == "flat":
                v = r["delta_flat"]
            else:
                v = max(r["delta_sharp"], -r["gamma_sharp"], r["gamma_sharp"] - 1)
            worst = max(worst, v)
        if worst < best[1]:
            best = (float(g), worst)
    return best

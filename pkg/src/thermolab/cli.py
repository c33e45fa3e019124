"""Command line driver: one subcommand per pipeline stage.

Every run resolves a config (defaults < file < --set < flags), writes a JSON
envelope with the resolved config and, for tabular results, CSV files into
``--out``. Exit codes: 0 success, 1 domain error, 2 config error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import io
from .errors import ConfigError, ThermolabError
from .hyperbolic import HyperbolicParams, detect_hyperbolic_times, frequency_field
from .inducing import build_scheme, induced_potential, tau_integral, variation_estimate
from .maps import NonDegeneracyData, bc_certificate, make_map, orbit, rovella_certificate
from .potentials import from_config as base_potential
from .shift import (ShiftSpace, bernoulli, conformal_decay_check, gibbs_check, gurevich_pressure,
                    locally_constant, markov, power_law, rpf_solve, table)
from .shift import CylinderMeasure
from .thermo import (PressureEstimate, _grid_sample, birkhoff_average, caratheodory_pressure,
                     equilibrium_state, finiteness_gap, log_jacobian, normalize_potential,
                     variational_pressure, viana_hyperbolic_potential)

# (group, command) -> {flag: (config path, type, help)}
FLAGS = {
    ("maps", "orbit"): {"x": ("orbit.x", float, "start point (interval maps)"),
                        "n": ("orbit.n", int, "number of steps")},
    ("maps", "certify-bc"): {"horizon": ("certify.bc.horizon", int, "orbit horizon")},
    ("maps", "certify-rovella"): {"horizon": ("certify.rovella.horizon", int, "orbit horizon")},
    ("hyp", "detect"): {"x": ("hyperbolic.x", float, "start point"),
                        "horizon": ("hyperbolic.horizon", int, "largest time scanned"),
                        "sigma": ("hyperbolic.sigma", float, "contraction rate"),
                        "epsilon": ("hyperbolic.epsilon", float, "recurrence truncation")},
    ("hyp", "frequency"): {"points": ("hyperbolic.points", int, "number of grid points"),
                           "horizon": ("hyperbolic.horizon", int, "orbit length"),
                           "sigma": ("hyperbolic.sigma", float, "contraction rate"),
                           "epsilon": ("hyperbolic.epsilon", float, "recurrence truncation")},
    ("induce", "build"): {"max_time": ("inducing.max_time", int, "largest inducing time"),
                          "resolution": ("inducing.resolution", float, "smallest cell kept")},
    ("induce", "variation"): {"depth": ("inducing.variation_depth", int, "largest cylinder depth")},
    ("shift", "pressure"): {"strategy": ("shift.strategy", str, "periodic_sums or truncation_sup"),
                            "n": ("shift.n_max", int, "largest n (or truncation N)"),
                            "anchor": ("shift.anchor", int, "anchor symbol for periodic sums")},
    ("shift", "rpf"): {"depth": ("shift.depth", int, "cylinder depth"),
                       "N": ("shift.N", int, "alphabet truncation")},
    ("shift", "gibbs-check"): {"depth": ("shift.gibbs_depth", int, "Gibbs check depth")},
    ("thermo", "pressure"): {"method": ("thermo.pressure.method", str, "caratheodory, birkhoff or "
                                        "variational_truncation"),
                             "delta": ("thermo.pressure.delta", float, "dynamical ball radius"),
                             "N": ("thermo.pressure.N", int, "smallest cover level")},
    ("thermo", "equilibrium"): {"N": ("thermo.truncation", int, "number of branches kept")},
    ("thermo", "abramov-check"): {"N": ("thermo.truncation", int, "number of branches kept")},
    ("thermo", "viana-potential"): {"L": ("thermo.viana.L", int, "orbit length")},
    ("thermo", "finiteness-gap"): {"K": ("thermo.gap.K", float, "Gibbs constant"),
                                   "lam": ("thermo.gap.lam", float, "decay rate lambda"),
                                   "gamma": ("thermo.gap.gamma", float, "gamma in (0, 1)"),
                                   "n": ("thermo.gap.n", int, "cylinder depth"),
                                   "m": ("thermo.gap.m", float, "conformal mass m(C_n)"),
                                   "mu": ("thermo.gap.mu", float, "Gibbs mass mu(C_n)"),
                                   "reading": ("thermo.gap.reading", str, "denominator reading A or B")},
}


# ---------------------------------------------------------------------------
# builders

def build_phi(cfg, m):
    spec = cfg["thermo"]["potential"]
    if not isinstance(spec, dict):
        raise ConfigError("thermo.potential must be a table", value=spec)
    return base_potential(spec, m)


def build_map(cfg):
    params = dict(cfg["map"])
    fam = params.pop("family")
    try:
        return make_map(fam, **params)
    except TypeError as e:
        raise ConfigError(f"bad map parameters: {e}", family=fam) from None


def build_nd(cfg):
    nd = cfg.get("nondegeneracy")
    if not nd:
        return None
    return NonDegeneracyData(float(nd["B"]), float(nd["beta"]), nd.get("b_exponent"))


def build_params(cfg):
    h = cfg["hyperbolic"]
    return HyperbolicParams(float(h["sigma"]), float(h["epsilon"]), float(h["delta_ball"]), h.get("b_exponent"))


def build_scheme_from(cfg, m):
    ind = cfg["inducing"]
    params = build_params(cfg)
    return build_scheme(m, build_nd(cfg), params if ind.get("hyperbolic_returns", True) else None,
                        ind.get("base_point"), int(ind["max_time"]), float(ind["resolution"]),
                        ind.get("base_region"), int(ind.get("max_pieces", 200000)))


def build_shift(cfg):
    sh = cfg["shift"]
    spec = dict(sh["potential"])
    kind = spec.get("kind")
    if kind == "bernoulli":
        pot, N = bernoulli(spec["p"]), len(spec["p"])
    elif kind == "locally_constant":
        pot, N = locally_constant(spec["values"]), len(spec["values"])
    elif kind == "random_locally_constant":
        rng = np.random.default_rng(int(spec.get("seed", cfg["seed"])))
        vals = rng.normal(0.0, float(spec.get("scale", 1.0)), int(spec["N"]))
        pot, N = locally_constant(vals), int(spec["N"])
    elif kind == "markov":
        pot, N = markov(spec["C"]), len(spec["C"])
    elif kind == "table":
        arr = np.asarray(spec["values"], float)
        pot, N = table(arr), arr.shape[0]
    elif kind == "power_law":
        pot = power_law(float(spec["s"]))
        N = int(sh["N"] or sh["n_max"])
    else:
        raise ConfigError(f"unknown shift potential kind {kind!r}")
    if sh.get("N") and kind != "power_law":
        N = min(N, int(sh["N"]))
    trans = spec.get("transitions")
    shift = ShiftSpace(N, None if trans is None else np.asarray(trans, dtype=bool)[:N, :N])
    return shift, pot


def _points_rows(P):
    P = np.asarray(P, float)
    if P.ndim == 1:
        return [{"x0": float(v), "x1": None} for v in P]
    return [{"x0": float(a), "x1": float(b)} for a, b in P]


# ---------------------------------------------------------------------------
# subcommands; each returns (result, {table name: rows})

def cmd_maps_orbit(cfg):
    m = build_map(cfg)
    o = cfg["orbit"]
    X = orbit(m, o["x"], int(o["n"]))
    rows = [dict(step=i, **r) for i, r in enumerate(_points_rows(X))]
    return {"n": int(o["n"]), "start": X[0], "end": X[-1], "family": m.family_tag}, {"orbit": rows}


def cmd_maps_certify_bc(cfg):
    m = build_map(cfg)
    bc = dict(cfg["certify"]["bc"])
    horizon, samples = int(bc.pop("horizon")), int(bc.pop("sample_orbits"))
    return bc_certificate(m, bc, horizon, samples, int(cfg["seed"])), {}


def cmd_maps_certify_rovella(cfg):
    rv = dict(cfg["certify"]["rovella"])
    mp = cfg.get("map", {})
    a = float(rv.pop("a", mp.get("a", 2.0)))
    s = float(rv.pop("s", mp.get("s", 1.5)))
    horizon, count = int(rv.pop("horizon")), int(rv.pop("sample_count"))
    return rovella_certificate(a, s, rv, horizon, count, int(cfg["seed"])), {}


def cmd_hyp_detect(cfg):
    m = build_map(cfg)
    h = cfg["hyperbolic"]
    rec = detect_hyperbolic_times(m, build_nd(cfg), h["x"], build_params(cfg), int(h["horizon"]))
    return rec.to_dict(), {"hyperbolic_times": [{"n": t} for t in rec.times]}


def cmd_hyp_frequency(cfg):
    m = build_map(cfg)
    h = cfg["hyperbolic"]
    count = int(h["points"])
    if h.get("grid", "regular") == "random":
        grid = m.sample(count, np.random.default_rng(int(cfg["seed"])))
    else:
        grid = _grid_sample(m, count)
    res = frequency_field(m, build_nd(cfg), build_params(cfg), grid, int(h["horizon"]), jobs=int(cfg["jobs"]))
    rows = []
    for r in res["rows"]:
        c = r["coords"]
        rows.append({"x0": c[0], "x1": c[1] if len(c) > 1 else None, "horizon": r["horizon"],
                     "hyperbolic_count": r["hyperbolic_count"], "frequency": r["frequency"]})
    return {"summary": res["summary"]}, {"frequency": rows}


def _branch_rows(sch):
    return [{"symbol": i, "tau": b.tau, "cell": np.ravel(b.cell).tolist(), "mass": b.mass, "word": list(b.word)}
            for i, b in enumerate(sch.branches)]


def cmd_induce_build(cfg):
    m = build_map(cfg)
    sch = build_scheme_from(cfg, m)
    res = {"n_branches": sch.n_branches, "completeness_mass": sch.completeness_mass, "base": sch.base,
           "tau_max": int(sch.taus.max()), "params": sch.params}
    return res, {"branches": _branch_rows(sch)}


def cmd_induce_variation(cfg):
    m = build_map(cfg)
    sch = build_scheme_from(cfg, m)
    phi = build_phi(cfg, m)
    Phi = induced_potential(sch, phi, sigma=float(cfg["hyperbolic"]["sigma"]))
    depth = int(cfg["inducing"]["variation_depth"])
    rows = [variation_estimate(Phi, sch, n, int(cfg["inducing"]["pair_samples"]), int(cfg["seed"]), phi=phi)
            for n in range(1, depth + 1)]
    ns = np.array([r["n"] for r in rows], float)
    vs = np.array([r["V_n"] for r in rows])
    ok = vs > 0
    slope = float(np.polyfit(ns[ok], np.log(vs[ok]), 1)[0]) if ok.sum() >= 2 else None
    res = {"A": Phi.A, "theta": Phi.theta, "rows": rows, "slope": slope,
           "pass": all(r["pass"] for r in rows) and (slope is None or slope <= math.log(Phi.theta) + 0.1)}
    return res, {"variation": rows}


def cmd_shift_pressure(cfg):
    shift, pot = build_shift(cfg)
    sh = cfg["shift"]
    res = gurevich_pressure(shift, pot, sh["strategy"], int(sh["n_max"]), int(sh["anchor"]),
                            int(sh["budget"]), sh.get("depth"))
    return res, {"pressure": res["rows"]}


def _solve(cfg):
    shift, pot = build_shift(cfg)
    sh = cfg["shift"]
    return rpf_solve(shift, pot, sh.get("depth"), float(sh["tol"]), int(sh["max_iter"]), budget=int(sh["budget"]))


def cmd_shift_rpf(cfg):
    sol = _solve(cfg)
    ent, integ = sol.entropy(), sol.integral()
    res = dict(sol.to_dict(), entropy=ent, integral=integ, variational_gap=ent + integ - sol.log_lambda)
    return res, {}


def cmd_shift_gibbs_check(cfg):
    sol = _solve(cfg)
    sh = cfg["shift"]
    g = gibbs_check(sol, int(sh["gibbs_depth"]))
    norm = rpf_solve(sol.shift, sol.potential.shifted(-sol.log_lambda), sol.depth, float(sh["tol"]),
                     int(sh["max_iter"]))
    decay = conformal_decay_check(norm, int(sh["decay_depth"]))
    return {"gibbs": g, "decay": decay}, {"decay": decay["rows"]}


def cmd_thermo_pressure(cfg):
    m = build_map(cfg)
    th = cfg["thermo"]
    pr = th["pressure"]
    phi = build_phi(cfg, m)
    method = pr["method"]
    tables = {}
    if method == "caratheodory":
        est = caratheodory_pressure(m, phi, _grid_sample(m, int(pr["sample_size"])), float(pr["delta"]),
                                    int(pr["N"]), int(pr["budget"]))
        tables["cover_levels"] = est.diagnostics["rows"]
    elif method == "birkhoff":
        x = m.sample(1, np.random.default_rng(int(cfg["seed"])))[0]
        n = int(pr["orbit_length"])
        val = birkhoff_average(m, lambda P: log_jacobian(m)(P) + phi(P), x, n)
        est = PressureEstimate(val, "birkhoff", {"orbit_length": n, "x": np.atleast_1d(x).tolist()},
                               "free energy of a typical orbit; lower-flavor estimate")
    elif method == "variational_truncation":
        sch = build_scheme_from(cfg, m)
        est = variational_pressure(sch, phi, th.get("truncation"))
    else:
        raise ConfigError(f"unknown pressure method {method!r}")
    return est.to_dict(), tables


def _pipeline(cfg):
    m = build_map(cfg)
    th = cfg["thermo"]
    phi = build_phi(cfg, m)
    sch = build_scheme_from(cfg, m)
    N = th.get("truncation")
    norm = th.get("normalize")
    est = None
    if norm is not None:
        opts = {"scheme": sch, "N": N} if norm == "variational_truncation" else {}
        phi, est = normalize_potential(m, phi, norm, **opts)
    proj, rep = equilibrium_state(m, phi, sch, N, params=build_params(cfg), nd=build_nd(cfg),
                                  support_samples=int(th["support_samples"]),
                                  horizon=int(th["expansion_horizon"]), seed=int(cfg["seed"]),
                                  jobs=int(cfg["jobs"]))
    if est is not None:
        rep["normalization"] = est.to_dict()
    return sch, proj, rep


def cmd_thermo_equilibrium(cfg):
    _, _, rep = _pipeline(cfg)
    return rep, {}


def cmd_thermo_abramov_check(cfg):
    sch, proj, rep = _pipeline(cfg)
    lhs = proj.h_bar + proj.int_phi_bar
    rhs = proj.tau_integral * (proj.h_mu + proj.int_phi)
    gap = abs(lhs - rhs)
    sch_t = sch.truncated(cfg["thermo"]["truncation"]) if cfg["thermo"].get("truncation") else sch
    mu = CylinderMeasure(1, np.arange(sch_t.n_branches)[:, None], proj.branch_weights)
    rows = [{"N": N, "tau_integral": tau_integral(sch_t, mu, N)} for N in range(1, int(sch_t.taus.max()) + 1)]
    return {"identity_gap": gap, "pass": bool(gap <= 1e-8), "report": rep,
            "projected": proj.to_dict()}, {"tau_truncations": rows}


def cmd_thermo_viana_potential(cfg):
    m = build_map(cfg)
    v = cfg["thermo"]["viana"]
    box = tuple(tuple(map(float, r)) for r in v["box"])
    _, cert = viana_hyperbolic_potential(m, box, v["bump"], int(v["L"]), v.get("pressure_hc"), float(v["c_hat"]),
                                         int(v["claim_orbits"]), int(v["claim_length"]), seed=int(cfg["seed"]))
    return {"certificate": cert}, {}


def cmd_thermo_finiteness_gap(cfg):
    g = cfg["thermo"]["gap"]
    return finiteness_gap(float(g["K"]), float(g["lam"]), float(g["gamma"]), g["n"], float(g["m"]),
                          float(g["mu"]), str(g["reading"])), {}


COMMANDS = {
    ("maps", "orbit"): cmd_maps_orbit,
    ("maps", "certify-bc"): cmd_maps_certify_bc,
    ("maps", "certify-rovella"): cmd_maps_certify_rovella,
    ("hyp", "detect"): cmd_hyp_detect,
    ("hyp", "frequency"): cmd_hyp_frequency,
    ("induce", "build"): cmd_induce_build,
    ("induce", "variation"): cmd_induce_variation,
    ("shift", "pressure"): cmd_shift_pressure,
    ("shift", "rpf"): cmd_shift_rpf,
    ("shift", "gibbs-check"): cmd_shift_gibbs_check,
    ("thermo", "pressure"): cmd_thermo_pressure,
    ("thermo", "equilibrium"): cmd_thermo_equilibrium,
    ("thermo", "abramov-check"): cmd_thermo_abramov_check,
    ("thermo", "viana-potential"): cmd_thermo_viana_potential,
    ("thermo", "finiteness-gap"): cmd_thermo_finiteness_gap,
}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(io.dumps({"schema_version": io.SCHEMA_VERSION, "command": None,
                                   "error": {"code": "cli.ConfigError", "message": message, "details": {}}}))
        sys.exit(2)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON or TOML run config")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes")
    common.add_argument("--seed", type=int, metavar="N", help="random seed")
    common.add_argument("--out", metavar="DIR", help="directory for JSON/CSV artifacts")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (dotted path, JSON value)")
    p = _Parser(prog="thermolab", description="Equilibrium-state laboratory for maps with critical sets.")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)
    subs = {}
    for (grp, name), flags in FLAGS.items():
        if grp not in subs:
            subs[grp] = groups.add_parser(grp).add_subparsers(dest="command", required=True,
                                                              parser_class=_Parser)
        sp = subs[grp].add_parser(name, parents=[common])
        for flag, (_, typ, hlp) in flags.items():
            sp.add_argument(f"--{flag.replace('_', '-')}", dest=f"ov_{flag}", type=typ, help=hlp)
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = make_parser().parse_args(argv)
    key = (args.group, args.command)
    name = " ".join(key)
    try:
        overrides = {path: getattr(args, f"ov_{flag}") for flag, (path, _, _) in FLAGS[key].items()}
        overrides.update({"seed": args.seed, "jobs": args.jobs, "output.dir": args.out})
        cfg = cfgmod.validate(cfgmod.resolve(args.config, overrides, args.set), name)
        result, tables = COMMANDS[key](cfg)
    except KeyError as e:
        err = ConfigError(f"missing config key {e.args[0]!r}")
        stdout.write(io.dumps({"schema_version": io.SCHEMA_VERSION, "command": name, "error": err.to_dict()}))
        return 2
    except ConfigError as e:
        stdout.write(io.dumps({"schema_version": io.SCHEMA_VERSION, "command": name, "error": e.to_dict()}))
        return 2
    except ThermolabError as e:
        stdout.write(io.dumps({"schema_version": io.SCHEMA_VERSION, "command": name, "error": e.to_dict()}))
        return 1
    envelope = {"schema_version": io.SCHEMA_VERSION, "command": name, "config": cfg, "result": result}
    text = io.dumps(envelope)
    stdout.write(text)
    out = cfg["output"].get("dir")
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        stem = name.replace(" ", "_").replace("-", "_")
        fmts = cfg["output"]["formats"]
        if "json" in fmts:
            (d / f"{stem}.json").write_text(text, encoding="utf-8")
        if "csv" in fmts:
            cols = io.schema()["csv"]
            for tname, rows in tables.items():
                io.write_csv(d / f"{stem}_{tname}.csv", cols[tname], rows)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

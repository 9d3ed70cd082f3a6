"""Command-line front end.

Every subcommand takes optional ``--config FILE.json`` whose keys are the
long option names (dashes or underscores); explicit flags win.  Tabular
results are CSV with a trailing ``# {...}`` summary line; structured
reports are JSON.  Each output echoes the resolved configuration.

Exit codes: 0 success or PASS, 1 usage or numerical error, 2 a classified
physical escape or FAIL verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import __version__
from .padic import (
    PadicError,
    character,
    character_value,
    format_padic,
    norm,
    parse_padic,
    polar_part,
    val,
)

EXIT_OK, EXIT_ERROR, EXIT_ESCAPE = 0, 1, 2


class UsageError(Exception):
    pass


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return _frac(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _fmt(x) -> str:
    return repr(float(x))


# --- configuration -------------------------------------------------------------

LATTICE_DEFAULTS = {"p": 2, "l": 1, "d": 3, "r": 0, "s": 3}
FIELD_DEFAULTS = {"phi_dim": 0.725, "zero_mode": True}
RG_DEFAULTS = {"eps": 0.1, "p": 2, "l": 1, "quad_order": 80, "phi_max": 6.0, "k_max": 8, "window": 10.0, "inner_order": 400}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "lattice": {**LATTICE_DEFAULTS, "site": None, "pair": None},
    "sample": {**LATTICE_DEFAULTS, **FIELD_DEFAULTS, "n_samples": 10, "seed": 0},
    "two_point": {**LATTICE_DEFAULTS, **FIELD_DEFAULTS, "n_samples": 0, "seed": 0, "batch_size": 100},
    "fourier": {**LATTICE_DEFAULTS, "s": 5, **FIELD_DEFAULTS, "k_min": None, "k_max": None},
    "l1mass": {**LATTICE_DEFAULTS, **FIELD_DEFAULTS, "s_min": 2, "s_max": 8},
    "mcmc": {
        **LATTICE_DEFAULTS,
        **FIELD_DEFAULTS,
        "g": 0.1,
        "mu": "critical",
        "n_sweeps": 1000,
        "burn_in": 200,
        "thinning": 1,
        "seed": 0,
        "step": 0.5,
        "batch_size": 100,
    },
    "rgflow": {**RG_DEFAULTS, "v2": 0.0, "v4": 0.0, "v6": 0.0, "v8": 0.0, "v10": 0.0, "v12": 0.0, "steps": 60},
    "fixedpoint": {**RG_DEFAULTS},
    "eigen": {**RG_DEFAULTS, "fixed_point": None, "gaussian": False},
    "critical_mu": {**RG_DEFAULTS, "g": 0.1, "bracket": [-1.0, 1.0], "tol": 1e-12, "flow_steps": 60},
    "manifold": {**RG_DEFAULTS, "start": "gaussian", "delta": 1e-4, "steps": 200, "branch": 1},
    "tcc": {**RG_DEFAULTS, "trajectory": "joining", "ghat": 0.05, "q": 0, "r_min": -12, "tol": None},
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    flat: dict[str, Any] = {}
    for k, v in raw.items():
        # nested sections such as {"lattice": {...}} are flattened
        if isinstance(v, dict) and k in ("lattice", "field", "rg", "params"):
            flat.update({kk.replace("-", "_"): vv for kk, vv in v.items()})
        else:
            flat[k.replace("-", "_")] = v
    return flat


def _resolve(args: argparse.Namespace) -> dict:
    defaults = COMMAND_DEFAULTS.get(args.command.replace("-", "_"), {})
    cfg = _load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(defaults) - {"seed", "threads", "out"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, dflt in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, dflt)
    if hasattr(args, "seed") and "seed" not in defaults and args.seed is not None:
        out["seed"] = args.seed
    return out


def _threads(args) -> int:
    t = getattr(args, "threads", None)
    if t is None:
        t = int(os.environ.get("ULTRARG_THREADS", "1") or 1)
    if t < 1:
        raise UsageError("--threads must be >= 1")
    return t


def _lattice(cfg):
    from .lattice import LatticeSpec

    return LatticeSpec(int(cfg["p"]), int(cfg["l"]), int(cfg["d"]), int(cfg["r"]), int(cfg["s"]))


def _model(cfg):
    from .field import CovarianceModel

    return CovarianceModel(_lattice(cfg), float(cfg["phi_dim"]))


def _rgspec(cfg):
    from .rg import RGSpec

    return RGSpec.bms(
        float(cfg["eps"]),
        p=int(cfg["p"]),
        l=int(cfg["l"]),
        quad_order=int(cfg["quad_order"]),
        phi_max=float(cfg["phi_max"]),
        k_max=int(cfg["k_max"]),
        window=float(cfg["window"]),
        inner_order=max(int(cfg["inner_order"]), 2 * int(cfg["quad_order"])),
    )


class Output:
    def __init__(self, path: str | None):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text: str):
        self.buf.write(text)

    def csv(self, header, rows, summary: dict):
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
        self.buf.write("# " + json.dumps(summary, sort_keys=True, default=_json_default) + "\n")

    def json(self, obj):
        self.buf.write(_dumps(obj) + "\n")

    def flush(self):
        data = self.buf.getvalue()
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)


# --- commands --------------------------------------------------------------------


def cmd_padic(args, out: Output) -> int:
    op = args.op
    p = args.p
    if op == "eval":
        if len(args.values) != 1:
            raise UsageError("padic eval takes one literal")
        x = parse_padic(args.values[0], p, args.precision)
        wanted = [k for k in ("norm", "val", "polar", "character") if getattr(args, k)]
        report = {
            "input": args.values[0],
            "p": p,
            "zero": x.is_zero,
            "value": format_padic(x),
            "val": "inf" if x.is_zero else val(x),
            "norm": _frac(norm(x)),
            "polar": _frac(polar_part(x).as_fraction()),
            "character": _character_report(x),
        }
        if x.is_zero:
            report["value"] = "0"
        if len(wanted) == 1:
            v = report[wanted[0]]
            out.write((json.dumps(v) if isinstance(v, dict) else str(v)) + "\n")
        elif wanted:
            out.json({k: report[k] for k in ["input", "p", *wanted]})
        else:
            out.json(report)
        return EXIT_OK
    if len(args.values) != 2:
        raise UsageError(f"padic {op} takes two literals")
    x, y = (parse_padic(v, p, args.precision) for v in args.values)
    z = {"add": lambda: x + y, "sub": lambda: x - y, "mul": lambda: x * y, "div": lambda: x / y}[op]()
    dist = norm(x - y)
    out.json(
        {
            "op": op,
            "p": p,
            "x": format_padic(x),
            "y": format_padic(y),
            "result": "0" if z.is_zero else format_padic(z),
            "norm": _frac(norm(z)),
            "distance": _frac(dist),
        }
    )
    return EXIT_OK


def _character_report(x) -> dict:
    t = character(x)
    c = character_value(t)
    return {"angle": _frac(t.as_fraction()), "re": c.real, "im": c.imag}


def cmd_lattice(args, out: Output) -> int:
    from .lattice import distance_level, format_site, shell_sizes, site_to_point, ultra_distance
    from .padic import format_padic as fp

    cfg = _resolve(args)
    sp = _lattice(cfg)
    report: dict[str, Any] = {
        "config": cfg,
        "sites": sp.n_sites,
        "depth": sp.depth,
        "cell_volume": sp.cell_volume,
        "box_volume": sp.n_sites * sp.cell_volume,
        "shells": [s._asdict() for s in shell_sizes(sp)],
    }
    if cfg["site"] is not None:
        i = int(cfg["site"])
        report["site"] = {"index": i, "digits": format_site(sp, i), "point": [fp(c) for c in site_to_point(sp, i).coords]}
    if cfg["pair"] is not None:
        i, j = (int(v) for v in cfg["pair"])
        report["pair"] = {"i": i, "j": j, "level": distance_level(sp, i, j), "distance": ultra_distance(sp, i, j)}
    out.json(report)
    return EXIT_OK


def cmd_sample(args, out: Output) -> int:
    from .field import sample_gaussian_batch

    cfg = _resolve(args)
    model = _model(cfg)
    n = int(cfg["n_samples"])
    if n < 1:
        raise UsageError("n_samples must be >= 1")
    x = sample_gaussian_batch(model, int(cfg["seed"]), n, bool(cfg["zero_mode"]))
    header = ["sample", *[f"x{i}" for i in range(model.spec.n_sites)]]
    out.csv(header, ([k, *map(float, row)] for k, row in enumerate(x)), {"config": cfg, "n": n})
    return EXIT_OK


def cmd_two_point(args, out: Output) -> int:
    from .field import empirical_two_point, exact_two_point, sample_gaussian_batch, slope_fit

    cfg = _resolve(args)
    model = _model(cfg)
    n = int(cfg["n_samples"])
    exact = exact_two_point(model, bool(cfg["zero_mode"]))
    if n > 0:
        x = sample_gaussian_batch(model, int(cfg["seed"]), n, bool(cfg["zero_mode"]))
        corr = empirical_two_point(x, model.spec, int(cfg["batch_size"]))
        source = "empirical"
    else:
        corr, source = exact, "exact"
    slope, se = slope_fit(corr)
    rows = [[d, e, s, c, corr.n] for (d, e, s, _), c in zip(corr.rows(), exact.estimate)]
    summary = {"config": cfg, "source": source, "slope": slope, "slope_stderr": se, "expected_slope": -2 * model.phi_dim}
    out.csv(["distance", "estimate", "stderr", "exact", "n"], rows, summary)
    return EXIT_OK


def cmd_fourier(args, out: Output) -> int:
    from .field import fourier_exact, fourier_two_point
    from .field.observables import _wls_slope
    from .padic import PadicPoint, PadicScalar

    cfg = _resolve(args)
    model = _model(cfg)
    sp = model.spec
    lo_n = sp.l * sp.r + 1 if cfg["k_min"] is None else int(cfg["k_min"])
    hi_n = sp.l * sp.s - 1 if cfg["k_max"] is None else int(cfg["k_max"])
    rows = []
    for n in range(lo_n, hi_n + 1):
        k = PadicPoint((PadicScalar.from_int(sp.p**n, sp.p),) + tuple(PadicScalar.zero(sp.p) for _ in range(sp.d - 1)))
        direct = fourier_two_point(model, k, bool(cfg["zero_mode"]))
        rows.append([n, float(sp.p) ** (-n), direct, fourier_exact(model, n, bool(cfg["zero_mode"]))])
    mid = [r for r in rows if sp.l * sp.r < r[0] < sp.l * sp.s]
    slope = se = None
    if len(mid) >= 2:
        slope, se = _wls_slope(np.log([r[1] for r in mid]), np.log([r[2] for r in mid]), None)
    summary = {"config": cfg, "slope": slope, "slope_stderr": se, "expected_slope": 2 * model.phi_dim - sp.d}
    out.csv(["k_exponent", "abs_k", "direct", "closed_form"], rows, summary)
    return EXIT_OK


def cmd_l1mass(args, out: Output) -> int:
    from .field import l1_mass

    cfg = _resolve(args)
    cfg["s"] = max(int(cfg["s"]), int(cfg["r"]) + 1)
    model = _model(cfg)
    masses = l1_mass(model, range(int(cfg["s_min"]), int(cfg["s_max"]) + 1))
    rows, prev = [], None
    for s, m in masses:
        rows.append([s, m, "" if prev is None else m / prev])
        prev = m
    sp = model.spec
    expected = float(sp.p) ** (sp.l * (sp.d - 2 * model.phi_dim))
    out.csv(["s", "mass", "ratio"], rows, {"config": cfg, "expected_ratio": expected})
    return EXIT_OK


def cmd_mcmc(args, out: Output) -> int:
    from .field import MultiscaleMetropolis, empirical_two_point, exact_two_point, wick_constants

    cfg = _resolve(args)
    model = _model(cfg)
    g = float(cfg["g"])
    mu = cfg["mu"]
    if mu == "critical":
        from .critical import critical_mu
        from .rg import RGSpec

        sp = model.spec
        rgs = RGSpec(p=sp.p, l=1, d=sp.d, phi_dim=model.phi_dim)
        mu = critical_mu(rgs, g) if g > 0 else 0.0
    mu = float(mu)
    chain = MultiscaleMetropolis(model, g, mu, int(cfg["seed"]), step=float(cfg["step"]), include_zero_mode=bool(cfg["zero_mode"]))
    configs = np.stack([c.values for c in chain.run(int(cfg["n_sweeps"]), int(cfg["burn_in"]), int(cfg["thinning"]))])
    corr = empirical_two_point(configs, model.spec, int(cfg["batch_size"]))
    exact = exact_two_point(model, bool(cfg["zero_mode"]))
    c = wick_constants(model)
    wick2 = (configs**2 - c).mean(axis=1)
    rows = [[d, e, s, x] for (d, e, s, _), x in zip(corr.rows(), exact.estimate)]
    summary = {
        "config": cfg,
        "mu": mu,
        "acceptance": chain.acceptance.tolist(),
        "wick2_mean": float(wick2.mean()),
        "n_configs": int(configs.shape[0]),
    }
    out.csv(["distance", "estimate", "stderr", "gaussian_exact"], rows, summary)
    return EXIT_OK


def cmd_rgflow(args, out: Output) -> int:
    from .rg import FlowStatus, Potential, flow, gaussian_eigenvalues

    cfg = _resolve(args)
    spec = _rgspec(cfg)
    c = [float(cfg.get(f"v{k}", 0.0) or 0.0) for k in spec.ks]
    V0 = Potential(spec.sigma2, tuple(c))
    res = flow(V0, spec, int(cfg["steps"]))
    traj = res.trajectory
    rows = [[i, *map(float, v), res.status.value if i == len(traj) - 1 else ""] for i, v in enumerate(traj)]
    factor = float(traj[1][0] / traj[0][0]) if len(traj) > 1 and traj[0][0] != 0 else None
    summary = {
        "config": cfg,
        "spec": spec.to_json(),
        "status": res.status.value,
        "message": res.message,
        "steps": res.steps,
        "first_step_v2_factor": factor,
        "lambda2": float(gaussian_eigenvalues(spec)[0]),
    }
    out.csv(["step", *[f"v{k}" for k in spec.ks], "classification"], rows, summary)
    escaped = res.status in (FlowStatus.ESCAPED_MASSIVE, FlowStatus.ESCAPED_UNSTABLE)
    return EXIT_ESCAPE if escaped else EXIT_OK


def cmd_fixedpoint(args, out: Output) -> int:
    from .critical import find_fixed_point

    cfg = _resolve(args)
    spec = _rgspec(cfg)
    fp = find_fixed_point(spec)
    out.json({"config": cfg, "tolerances": {"residual": 1e-10}, **fp.to_json()})
    return EXIT_OK


def cmd_eigen(args, out: Output) -> int:
    from .critical import find_fixed_point, gaussian_fixed_point, spectrum
    from .rg import Potential, RGSpec

    cfg = _resolve(args)
    if cfg["fixed_point"]:
        with open(cfg["fixed_point"]) as fh:
            obj = json.load(fh)
        spec = RGSpec.from_json(obj["spec"])
        v = Potential.from_json(obj["potential"]).vector
        source = cfg["fixed_point"]
    elif cfg["gaussian"]:
        spec = _rgspec(cfg)
        v = gaussian_fixed_point(spec).vector
        source = "gaussian"
    else:
        spec = _rgspec(cfg)
        v = find_fixed_point(spec).vector
        source = "ir"
    w, U = spectrum(v, spec)
    from .critical import _complex_list

    out.json(
        {
            "config": cfg,
            "spec": spec.to_json(),
            "source": source,
            "eigenvalues": _complex_list(w),
            "eigenvectors": [_complex_list(c) for c in U.T],
            "n_relevant": int(np.sum(np.abs(w) > 1)),
        }
    )
    return EXIT_OK


def cmd_critical_mu(args, out: Output) -> int:
    from .critical import critical_mu_search

    cfg = _resolve(args)
    spec = _rgspec(cfg)
    lo, hi = (float(b) for b in cfg["bracket"])
    res = critical_mu_search(spec, float(cfg["g"]), (lo, hi), float(cfg["tol"]), int(cfg["flow_steps"]))
    out.json({"config": cfg, "spec": spec.to_json(), **res.to_json()})
    return EXIT_OK


def cmd_manifold(args, out: Output) -> int:
    from .critical import find_fixed_point, unstable_manifold

    cfg = _resolve(args)
    spec = _rgspec(cfg)
    fp = find_fixed_point(spec)
    start = cfg["start"]
    at = "gaussian" if start == "gaussian" else fp
    tr = unstable_manifold(spec, at, float(cfg["delta"]), int(cfg["steps"]), int(cfg["branch"]), target=fp.vector)
    out.csv(["step", *[f"v{k}" for k in spec.ks]], tr.rows(), {"config": cfg, **tr.to_json()})
    return EXIT_ESCAPE if tr.status in ("ESCAPED_MASSIVE", "ESCAPED_UNSTABLE", "DIVERGED") else EXIT_OK


def cmd_tcc(args, out: Output) -> int:
    from .critical import tcc_check

    cfg = _resolve(args)
    spec = _rgspec(cfg)
    rep = tcc_check(
        spec,
        cfg["trajectory"],
        ghat=float(cfg["ghat"]),
        q=int(cfg["q"]),
        r_min=int(cfg["r_min"]),
        tol=None if cfg["tol"] is None else float(cfg["tol"]),
        workers=_threads(args),
    )
    out.json({"config": cfg, **rep.to_json()})
    return EXIT_OK if rep.passed else EXIT_ESCAPE


# --- parser ----------------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser, seed: bool = False):
    sp.add_argument("--config", help="JSON config file; flags override its keys")
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--threads", type=int, help="worker cap (also ULTRARG_THREADS)")
    if seed:
        sp.add_argument("--seed", type=int)


def _add_lattice(sp, s=None):
    for name in ("p", "l", "d", "r", "s"):
        sp.add_argument(f"--{name}", type=int)


def _add_field(sp):
    sp.add_argument("--phi-dim", dest="phi_dim", type=float)
    sp.add_argument("--no-zero-mode", dest="zero_mode", action="store_const", const=False)


def _add_rg(sp):
    sp.add_argument("--eps", type=float, help="epsilon = 3 - 4 [phi]")
    sp.add_argument("--p", type=int)
    sp.add_argument("--l", type=int)
    sp.add_argument("--quad-order", dest="quad_order", type=int)
    sp.add_argument("--phi-max", dest="phi_max", type=float)
    sp.add_argument("--k-max", dest="k_max", type=int)
    sp.add_argument("--window", type=float)
    sp.add_argument("--inner-order", dest="inner_order", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ultrarg", description="Hierarchical p-adic field theory and RG toolkit.")
    ap.add_argument("--version", action="version", version=f"ultrarg {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("padic", help="p-adic arithmetic")
    sp.add_argument("op", choices=["eval", "add", "sub", "mul", "div"])
    sp.add_argument("values", nargs="+")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--precision", type=int, default=64)
    for flag in ("norm", "val", "polar", "character"):
        sp.add_argument(f"--{flag}", action="store_true")
    sp.add_argument("--out")

    sp = sub.add_parser("lattice", help="lattice geometry summary")
    _add_common(sp)
    _add_lattice(sp)
    sp.add_argument("--site", type=int)
    sp.add_argument("--pair", type=int, nargs=2)

    sp = sub.add_parser("sample", help="exact Gaussian samples (CSV)")
    _add_common(sp, seed=True)
    _add_lattice(sp)
    _add_field(sp)
    sp.add_argument("--n-samples", dest="n_samples", type=int)

    sp = sub.add_parser("two-point", help="shell two-point function and slope")
    _add_common(sp, seed=True)
    _add_lattice(sp)
    _add_field(sp)
    sp.add_argument("--n-samples", dest="n_samples", type=int, help="0 = exact covariance")
    sp.add_argument("--batch-size", dest="batch_size", type=int)

    sp = sub.add_parser("fourier", help="direct character-sum Fourier transform")
    _add_common(sp)
    _add_lattice(sp)
    _add_field(sp)
    sp.add_argument("--k-min", dest="k_min", type=int, help="smallest n with |k| = p^-n")
    sp.add_argument("--k-max", dest="k_max", type=int)

    sp = sub.add_parser("l1mass", help="partial L1 masses over growing boxes")
    _add_common(sp)
    _add_lattice(sp)
    _add_field(sp)
    sp.add_argument("--s-min", dest="s_min", type=int)
    sp.add_argument("--s-max", dest="s_max", type=int)

    sp = sub.add_parser("mcmc", help="Metropolis sampling of the interacting measure")
    _add_common(sp, seed=True)
    _add_lattice(sp)
    _add_field(sp)
    sp.add_argument("--g", type=float)
    sp.add_argument("--mu", help="number or 'critical'")
    sp.add_argument("--n-sweeps", dest="n_sweeps", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)
    sp.add_argument("--thinning", type=int)
    sp.add_argument("--step", type=float)
    sp.add_argument("--batch-size", dest="batch_size", type=int)

    sp = sub.add_parser("rgflow", help="iterate the RG map (CSV trajectory)")
    _add_common(sp)
    _add_rg(sp)
    for k in (2, 4, 6, 8, 10, 12):
        sp.add_argument(f"--v{k}", type=float)
    sp.add_argument("--steps", type=int)

    sp = sub.add_parser("fixedpoint", help="nontrivial IR fixed point (JSON)")
    _add_common(sp)
    _add_rg(sp)

    sp = sub.add_parser("eigen", help="spectrum of the linearized RG map")
    _add_common(sp)
    _add_rg(sp)
    sp.add_argument("--fixed-point", dest="fixed_point", help="JSON written by 'fixedpoint'")
    sp.add_argument("--gaussian", action="store_const", const=True)

    sp = sub.add_parser("critical-mu", help="critical bare mass by bisection")
    _add_common(sp)
    _add_rg(sp)
    sp.add_argument("--g", type=float)
    sp.add_argument("--bracket", type=float, nargs=2)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--flow-steps", dest="flow_steps", type=int)

    sp = sub.add_parser("manifold", help="trace an unstable manifold (CSV)")
    _add_common(sp)
    _add_rg(sp)
    sp.add_argument("--from", dest="start", choices=["gaussian", "ir"])
    sp.add_argument("--delta", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--branch", type=int, choices=[1, -1])

    sp = sub.add_parser("tcc", help="transverse convergence check (JSON)")
    _add_common(sp)
    _add_rg(sp)
    sp.add_argument("--trajectory", choices=["joining", "self-similar", "self_similar"])
    sp.add_argument("--ghat", type=float)
    sp.add_argument("--q", type=int)
    sp.add_argument("--r-min", dest="r_min", type=int)
    sp.add_argument("--tol", type=float)
    return ap


COMMANDS: dict[str, Callable] = {
    "padic": cmd_padic,
    "lattice": cmd_lattice,
    "sample": cmd_sample,
    "two-point": cmd_two_point,
    "fourier": cmd_fourier,
    "l1mass": cmd_l1mass,
    "mcmc": cmd_mcmc,
    "rgflow": cmd_rgflow,
    "fixedpoint": cmd_fixedpoint,
    "eigen": cmd_eigen,
    "critical-mu": cmd_critical_mu,
    "manifold": cmd_manifold,
    "tcc": cmd_tcc,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    out = Output(getattr(args, "out", None))
    try:
        if args.command != "padic":
            _threads(args)
        code = COMMANDS[args.command](args, out)
    except (UsageError, PadicError, ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return EXIT_ERROR
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())

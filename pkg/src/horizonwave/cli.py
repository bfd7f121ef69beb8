"""Command-line front end.

Subcommands: qnm, scan, carleman, decay, verify.  A flat sectioned
key = value config file drives each pipeline; outputs are deterministic
CSV files plus a small plotting-script stub.  Exit codes: 0 success,
1 config error, 2 computational failure, 3 verdict-false (verify).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import carleman as carleman_mod
from . import decay as decay_mod
from . import model as model_mod
from . import spectra as spectra_mod
from . import symbol as symbol_mod


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config parsing (line-numbered diagnostics)

_SCHEMA = {
    "model": {"mass": float, "lam": float, "v0": float, "ell": int},
    "discretization": {"n": int, "scheme": str},
    "band": {"a": float, "b": float},
    "scan": {"h_list": "floats", "n_z": int, "depth_c1": float},
    "window": {"re_lo": float, "re_hi": float, "im_lo": float, "im_hi": float},
    "carleman": {"density": int, "alpha_cap": float, "eps0_halvings": int,
                 "n_r": int, "n_dir": int, "amplitude": float},
    "decay": {"t_final": float, "dt": float, "data": str},
    "output": {"dir": str},
}

_DEFAULTS = {
    "model": {"mass": 1.0, "lam": 0.03, "v0": 0.1, "ell": 2},
    "discretization": {"n": 96, "scheme": "collocation"},
    "band": {"a": 0.5, "b": 2.0},
    "scan": {"h_list": [1.0, 0.5, 0.25], "n_z": 8, "depth_c1": 2.0},
    "window": None,
    "carleman": {"density": 128, "alpha_cap": 4096.0, "eps0_halvings": 40,
                 "n_r": 200, "n_dir": 64, "amplitude": 0.35},
    "decay": {"t_final": 1000.0, "dt": 0.0, "data": "mode"},
    "output": {"dir": "."},
}


def parse_config(path):
    """Parse the sectioned key = value config, validating against the schema.

    Unknown sections/keys and malformed values raise ConfigError with the
    offending line number.
    """
    cfg = {k: (dict(v) if v else None) for k, v in _DEFAULTS.items()}
    cfg["window"] = None
    if path is None:
        return cfg
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    section = None
    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigError(f"line {ln}: unknown section [{section}]")
            if cfg.get(section) is None:
                cfg[section] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value")
        if section is None:
            raise ConfigError(f"line {ln}: key outside any section")
        key, val = [s.strip() for s in line.split("=", 1)]
        key = key.lower()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {ln}: unknown key {key!r} in [{section}]")
        typ = _SCHEMA[section][key]
        try:
            if typ == "floats":
                cfg[section][key] = [float(t) for t in val.replace(",", " ").split()]
            elif typ is int:
                cfg[section][key] = int(val)
            elif typ is float:
                cfg[section][key] = float(val)
            else:
                cfg[section][key] = val
        except ValueError:
            raise ConfigError(f"line {ln}: cannot parse value {val!r} for {key}")
    _validate(cfg)
    return cfg


def _validate(cfg):
    m = cfg["model"]
    if m["lam"] <= 0:
        raise ConfigError("model.lam must be positive")
    if m["ell"] < 0:
        raise ConfigError("model.ell must be >= 0")
    d = cfg["discretization"]
    if d["n"] < 8:
        raise ConfigError("discretization.n must be >= 8")
    if d["scheme"] not in ("collocation", "finite-difference-4"):
        raise ConfigError(f"unknown scheme {d['scheme']!r}")
    b = cfg["band"]
    if not (0 < b["a"] < b["b"]):
        raise ConfigError("band must satisfy 0 < a < b")
    if any(h <= 0 for h in cfg["scan"]["h_list"]):
        raise ConfigError("scan.h_list entries must be positive")
    if cfg["decay"]["t_final"] < 1.0:
        raise ConfigError("decay.t_final must be at least 1")


# ---------------------------------------------------------------------------
# deterministic CSV writing


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".12e")


_PLOT_STUB = """\
#!/usr/bin/env python
\"\"\"Plot {name} output (auto-generated stub).\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
with open(path) as fh:
    rows = list(csv.DictReader(fh))
cols = {{k: [float(r[k]) for r in rows] for k in rows[0]}}
plt.plot(cols[{x!r}], cols[{y!r}], ".-")
plt.xlabel({x!r}); plt.ylabel({y!r})
plt.tight_layout(); plt.show()
"""


def _write_plot_stub(outdir, name, csv_name, x, y):
    with open(os.path.join(outdir, f"plot_{name}.py"), "w") as fh:
        fh.write(_PLOT_STUB.format(name=name, csv=csv_name, x=x, y=y))


# ---------------------------------------------------------------------------
# pipelines


def _build(cfg):
    m = cfg["model"]
    allow = m["v0"] <= 0.0
    model = model_mod.build_model(m["mass"], m["lam"], m["v0"], m["ell"],
                                  allow_nonpositive_v0=allow)
    geom = model_mod.build_slice(model)
    model, geom = model_mod.normalize(model, geom)
    coeffs = model_mod.reduce_pencil(model, geom)
    pencil = spectra_mod.discretize(coeffs, cfg["discretization"]["n"],
                                    cfg["discretization"]["scheme"])
    return model, geom, coeffs, pencil


def cmd_qnm(cfg, outdir, seed):
    model, geom, coeffs, pencil = _build(cfg)
    w = cfg["window"]
    window = None
    if w is not None:
        window = (w["re_lo"], w["re_hi"], w["im_lo"], w["im_hi"])
    res = spectra_mod.resonances(pencil, window=window)
    rows = [(om.real, om.imag, rs, cv)
            for om, rs, cv in zip(res.omegas, res.residuals, res.converged)]
    _write_csv(os.path.join(outdir, "resonances.csv"),
               ["re", "im", "residual", "converged"], rows)
    _write_plot_stub(outdir, "qnm", "resonances.csv", "re", "im")
    return 0


def cmd_scan(cfg, outdir, seed):
    model, geom, coeffs, pencil = _build(cfg)
    b = cfg["band"]
    s = cfg["scan"]
    result = spectra_mod.scan_strip(pencil, (b["a"], b["b"]), s["h_list"],
                                    depth_C1=s["depth_c1"], n_z=s["n_z"])
    rows = [(om.real, om.imag, nv, h, z)
            for om, nv, h, z in zip(result.omegas, result.norms,
                                    result.h_values, result.z_values)]
    _write_csv(os.path.join(outdir, "scan.csv"),
               ["re_omega", "im_omega", "norm", "h", "z"], rows)
    report = {
        "growth_rate_C": result.growth_rate,
        "strip_C0": result.strip_C0,
        "strip_omega0": result.strip_omega0,
        "fit_residual_ratio": result.fit_residual_ratio,
        "superlinear_rejected": result.superlinear_rejected,
        "strip_free": result.strip_free,
        "real_axis_clear": result.real_axis_clear,
        "verdict": result.verdict,
    }
    with open(os.path.join(outdir, "verdict.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_plot_stub(outdir, "scan", "scan.csv", "re_omega", "norm")
    return 0


def cmd_carleman(cfg, outdir, seed):
    model, geom, coeffs, pencil = _build(cfg)
    b = cfg["band"]
    c = cfg["carleman"]
    w1, w2 = carleman_mod.build_interior(model, geom, (b["a"], b["b"]),
                                         amplitude=c["amplitude"],
                                         alpha_cap=c["alpha_cap"])
    w1 = carleman_mod.extend_boundary(w1, max_halvings=c["eps0_halvings"])
    w2 = carleman_mod.extend_boundary(w2, max_halvings=c["eps0_halvings"])
    margin1 = carleman_mod.certify_hypoellipticity(w1, model, geom,
                                                   (b["a"], b["b"]),
                                                   density=c["density"])
    margin2 = carleman_mod.certify_hypoellipticity(w2, model, geom,
                                                   (b["a"], b["b"]),
                                                   density=c["density"])
    cert = carleman_mod.certify_pseudoconvexity(model, geom, n_r=c["n_r"],
                                                n_dir=c["n_dir"], seed=seed)
    rr = np.linspace(0.0, w1.r_total, 801)
    rows = [(r, p1, p2, th) for r, p1, p2, th in zip(
        rr, w1.phi(rr), w2.phi(rr), w1.extension.theta(w1.dist(rr)))]
    _write_csv(os.path.join(outdir, "carleman.csv"),
               ["r", "phi1", "phi2", "theta_eps"], rows)
    report = {
        "M": cert.M, "delta": cert.delta, "c": cert.c, "R0": cert.R0,
        "worst_point": list(cert.worst_point), "margin": cert.margin,
        "hypoellipticity_margin_1": margin1,
        "hypoellipticity_margin_2": margin2,
        "alpha": w1.alpha, "bernoulli_R0": w1.extension.R0,
        "mollification_eps": w1.extension.eps,
    }
    with open(os.path.join(outdir, "certificate.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_plot_stub(outdir, "carleman", "carleman.csv", "r", "phi1")
    return 0


def cmd_decay(cfg, outdir, seed):
    model, geom, coeffs, pencil = _build(cfg)
    d = cfg["decay"]
    gen = decay_mod.assemble_generator(pencil)
    rng = np.random.default_rng(seed)
    if d["data"] == "mode":
        v0, v1, _ = decay_mod.project_single_mode(gen)
    elif d["data"] == "random":
        x = pencil.nodes_x
        bump = np.exp(-1.0 / np.clip(x * (1 - x), 1e-12, None)) * 4.0
        v0 = bump * rng.standard_normal(len(x))
        v1 = np.zeros_like(v0)
    else:
        raise ConfigError(f"unknown decay data family {d['data']!r}")
    dt = d["dt"] if d["dt"] > 0 else None
    traj = decay_mod.evolve(gen, v0, v1, d["t_final"], dt=dt)
    report = decay_mod.fit_log_decay(traj)
    env = report.log_constant * traj.data_norm / np.log(2.0 + traj.times) ** report.log_exponent
    rows = list(zip(traj.times, traj.energies, env))
    _write_csv(os.path.join(outdir, "decay.csv"),
               ["t", "energy", "bound_envelope"], rows)
    with open(os.path.join(outdir, "decay.json"), "w") as fh:
        json.dump({"log_constant": report.log_constant,
                   "log_exponent": report.log_exponent,
                   "bounded": report.bounded,
                   "exp_rate": report.exp_rate,
                   "data_norm": traj.data_norm}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_plot_stub(outdir, "decay", "decay.csv", "t", "energy")
    return 0


def cmd_verify(cfg, outdir, seed):
    """Run the condensed invariant suite; exit 3 on any false verdict."""
    checks = {}
    model, geom, coeffs, pencil = _build(cfg)
    nf = geom.normal

    # symbol-level closed forms vs finite differences
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.05, 0.5, 64) * nf.r_total
    p = symbol_mod.SymbolPoint(r, rng.normal(size=64), rng.normal(size=64),
                               np.abs(rng.normal(size=64)))
    G_fun = lambda q: symbol_mod.eval_G(model, geom, q)
    r_fun = lambda q: np.asarray(q.r, dtype=float)
    num = symbol_mod.poisson_bracket(G_fun, r_fun, p)
    err = np.max(np.abs(num - symbol_mod.bracket_G_r(model, geom, p)))
    checks["bracket_G_r"] = bool(err < 1e-8 * max(1.0, float(np.max(np.abs(num)))))

    # Green's identity on a smooth test vector
    x = pencil.nodes_x
    u = np.exp(-40.0 * (x - 0.5) ** 2) * (1.0 + 0.5j * x)
    res = spectra_mod.greens_identity_residual(pencil, u, z=1.0, h=1.0)
    fine = spectra_mod.discretize(coeffs, 2 * pencil.n, pencil.scheme)
    xf = fine.nodes_x
    uf = np.exp(-40.0 * (xf - 0.5) ** 2) * (1.0 + 0.5j * xf)
    res_f = spectra_mod.greens_identity_residual(fine, uf, z=1.0, h=1.0)
    checks["greens_identity_refines"] = bool(res_f <= res + 1e-12)

    # generator/pencil spectral agreement.  The pencil is strongly
    # non-normal, so eigenvalues from two algebraically equivalent
    # linearizations can drift apart inside the pseudospectrum; the
    # well-posed statement is that every generator eigen-frequency is an
    # eigenvalue of the quadratic pencil, checked through the relative
    # smallest-singular-value residual of P(omega).
    gen = decay_mod.assemble_generator(pencil)
    gen_om = gen.eigen_frequencies()
    order = np.argsort(-gen_om.imag)
    agree = True
    for om in gen_om[order][:10]:
        if spectra_mod._relative_residual(pencil, om) > 1e-6:
            agree = False
    checks["generator_matches_pencil"] = agree

    # pseudoconvexity certificate
    try:
        cert = carleman_mod.certify_pseudoconvexity(model, geom, seed=seed)
        checks["pseudoconvexity"] = bool(cert.c > 0)
    except carleman_mod.CertificationError:
        checks["pseudoconvexity"] = False

    with open(os.path.join(outdir, "verify.json"), "w") as fh:
        json.dump(checks, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if all(checks.values()) else 3


# ---------------------------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="horizonwave",
        description="Resonances, resolvent bounds, Carleman certificates and "
                    "energy decay for waves on horizon-bounded spacetimes.")
    parser.add_argument("command",
                        choices=["qnm", "scan", "carleman", "decay", "verify"])
    parser.add_argument("--config", default=None, help="config file path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=0,
                        help="BLAS thread cap (0 = leave unchanged)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    handler = {"qnm": cmd_qnm, "scan": cmd_scan, "carleman": cmd_carleman,
               "decay": cmd_decay, "verify": cmd_verify}[args.command]
    try:
        return handler(cfg, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (model_mod.ModelError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (spectra_mod.EigensolverError, spectra_mod.SingularPencilError,
            spectra_mod.ScanError, decay_mod.InstabilityError,
            carleman_mod.CarlemanConstructionError,
            carleman_mod.CertificationError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

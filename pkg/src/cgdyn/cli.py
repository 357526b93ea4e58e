"""Command line front end: every experiment as a subcommand writing CSV + JSON.

Conventions shared by all subcommands:
  * trajectory CSV columns `t,rx,ry,rz,purity` (swap-kappa appends
    `kappa,rate`), floats at 17 significant digits, '\n' line endings,
    so identical config + seed reproduces byte-identical files;
  * a metadata JSON next to the CSV with the fully resolved config, the
    seed, the library version and derived quantities;
  * `--config file.json` supplies any value a flag could; explicit flags
    win over the file, the file wins over built-in defaults;
  * exit 0 on success, 1 on validation errors, 2 on numeric failure
    (positivity loss), messages on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, channels, diagnostics, evolve, maxent, qcore
from .coarse_grain import CoarseGraining, apply_cg, custom, non_preferential, preferential

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

EXPERIMENTS = ("swap-kappa", "cnot", "field", "ising", "linear-nm", "diagnostics", "sweep")


# ---------------------------------------------------------------------------
# Config plumbing


def _parse_bloch(value):
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
    else:
        parts = list(value)
    if len(parts) != 3:
        raise ValueError(f"Bloch vector needs exactly three components, got {value!r}")
    vec = np.array([float(p) for p in parts])
    if np.dot(vec, vec) > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector {vec.tolist()} lies outside the unit ball")
    return vec


def _load_config(path, experiment):
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    exp = cfg.pop("experiment", None)
    if exp is not None and exp != experiment:
        raise ValueError(f"config is for experiment {exp!r}, invoked as {experiment!r}")
    return cfg


def _resolve(args, defaults):
    """defaults < config file < explicit flags, per key."""
    cfg = _load_config(args.config, args.experiment) if args.config else {}
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}; allowed: {sorted(defaults)}")
    out = {}
    for key, fallback in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, fallback)
    return out


def _distribution(n, p1, probs):
    if probs is not None:
        if isinstance(probs, str):
            probs = [float(p) for p in probs.replace(",", " ").split() if p]
        vec = custom(np.asarray(probs, dtype=float))
        if vec.n != n:
            raise ValueError(f"weight vector covers {vec.n} sites, experiment has {n}")
        return vec
    if p1 is None:
        return non_preferential(n)
    return preferential(n, p1)


def _time_grid(resolved, t_c=None):
    """(t | tmax+steps) -> 1-d grid, inclusive endpoints.

    tmax may carry a literal `tc` suffix ("4tc") for field runs.
    """
    t_single = resolved.get("t")
    if t_single is not None:
        return np.array([float(t_single)])
    tmax = resolved["tmax"]
    if isinstance(tmax, str):
        raw = tmax.strip().lower()
        if raw.endswith("tc"):
            if t_c is None:
                raise ValueError("a 'tc' time unit only makes sense for field runs")
            if math.isinf(t_c):
                raise ValueError("t_c is infinite at zero frequency spread")
            factor = raw[:-2].strip()
            tmax = (float(factor) if factor else 1.0) * t_c
        else:
            tmax = float(raw)
    tmax = float(tmax)
    steps = int(resolved["steps"])
    if tmax <= 0.0:
        raise ValueError(f"tmax must be positive, got {tmax}")
    if steps < 2:
        raise ValueError(f"steps must be at least 2, got {steps}")
    return np.linspace(0.0, tmax, steps)


def _fmt(x):
    return f"{float(x):.17g}"


def _write_rows(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _metadata_path(resolved):
    meta = resolved.get("metadata")
    if meta is not None:
        return meta
    out = resolved["output"]
    if out == "-":
        return None
    root, _ = os.path.splitext(out)
    return root + ".meta.json"


def _write_metadata(resolved, experiment, derived):
    path = _metadata_path(resolved)
    if path is None:
        return
    doc = {
        "experiment": experiment,
        "config": {
            k: v for k, v in resolved.items() if k not in ("output", "metadata")
        },
        "version": __version__,
        "derived": derived,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _trajectory_rows(traj):
    return [
        (t, b[0], b[1], b[2], p)
        for t, b, p in zip(traj.times, traj.bloch, traj.purity)
    ]


# ---------------------------------------------------------------------------
# Experiments


def _run_swap(args):
    defaults = {
        "p1": 0.7, "probs": None, "omega": 1.0, "bloch": [0.6, 0.0, 0.3],
        "tmax": 2.0 * math.pi, "steps": 101, "t": None,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    cg = _distribution(2, res["p1"] if res["probs"] is None else None, res["probs"])
    bloch0 = _parse_bloch(res["bloch"])
    r0 = float(np.linalg.norm(bloch0))
    if r0 < 1e-15:
        raise ValueError("the contraction factor is undefined at zero initial radius")
    rho0 = qcore.density_from_bloch(bloch0)
    spec = evolve.Swap(omega=res["omega"])
    times = _time_grid(res)
    traj = evolve.trajectory(rho0, cg, spec, times)

    r1, r2 = maxent.assign(rho0, cg).solution.per_particle_r
    kappa = np.linalg.norm(traj.bloch, axis=1) / r0
    rate = channels.swap_rate(times, cg, r1, r2, omega=res["omega"])
    rows = [
        (t, b[0], b[1], b[2], p, k, rt)
        for t, b, p, k, rt in zip(times, traj.bloch, traj.purity, kappa, rate)
    ]
    _write_rows(res["output"], ["t", "rx", "ry", "rz", "purity", "kappa", "rate"], rows)
    derived = dict(traj.metadata, per_particle_r=[float(r1), float(r2)])
    _write_metadata(res, "swap-kappa", derived)
    return 0


def _run_cnot(args):
    defaults = {
        "p1": 0.7, "probs": None, "omega": 1.0, "bloch": [0.6, 0.0, 0.3],
        "tmax": 2.0 * math.pi, "steps": 101, "t": None,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    cg = _distribution(2, res["p1"] if res["probs"] is None else None, res["probs"])
    rho0 = qcore.density_from_bloch(_parse_bloch(res["bloch"]))
    spec = evolve.Cnot(omega=res["omega"])
    traj = evolve.trajectory(rho0, cg, spec, _time_grid(res))
    _write_rows(res["output"], ["t", "rx", "ry", "rz", "purity"], _trajectory_rows(traj))
    _write_metadata(res, "cnot", traj.metadata)
    return 0


def _run_field(args):
    defaults = {
        "n": 10, "p1": 0.5, "probs": None, "mu": 1.5, "sigma": 0.2, "seed": 0,
        "interaction": False, "bloch": [0.8, 0.0, 0.0],
        "tmax": "4tc", "steps": 401, "t": None,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    n = int(res["n"])
    spec = evolve.sample_field(
        n, mu=res["mu"], sigma=res["sigma"], seed=int(res["seed"]),
        include_interaction=bool(res["interaction"]),
    )
    cg = _distribution(n, res["p1"] if res["probs"] is None else None, res["probs"])
    rho0 = qcore.density_from_bloch(_parse_bloch(res["bloch"]))
    times = _time_grid(res, t_c=spec.t_c)
    traj = evolve.trajectory(rho0, cg, spec, times)
    _write_rows(res["output"], ["t", "rx", "ry", "rz", "purity"], _trajectory_rows(traj))
    derived = dict(
        traj.metadata,
        assumptions={
            "remainder_weights": "(1 - p1)/(n - 1) spread over sites 2..n",
            "rotation_angle": "omega_1 * t",
        },
    )
    _write_metadata(res, "field", derived)
    return 0


def _run_ising(args):
    defaults = {
        "n_spins": 4, "J": 1.0, "g": 0.0, "boundary": "closed",
        "p1": None, "probs": None,
        "theta": math.pi / 2, "phi": 0.0, "bloch": None,
        "tmax": None, "steps": 101, "t": None,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    n = int(res["n_spins"])
    spec = evolve.IsingChain(
        n_spins=n, J=res["J"], g=res["g"], boundary=res["boundary"]
    )
    cg = _distribution(n, res["p1"] if res["probs"] is None else None, res["probs"])
    if res["bloch"] is not None:
        bloch0 = _parse_bloch(res["bloch"])
    else:
        th, ph = float(res["theta"]), float(res["phi"])
        bloch0 = np.array(
            [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
        )
    if res["t"] is None and res["tmax"] is None:
        res["tmax"] = math.pi / abs(res["J"]) if res["J"] else math.pi
    rho0 = qcore.density_from_bloch(bloch0)
    traj = evolve.trajectory(rho0, cg, spec, _time_grid(res))
    _write_rows(res["output"], ["t", "rx", "ry", "rz", "purity"], _trajectory_rows(traj))
    _write_metadata(res, "ising", traj.metadata)
    return 0


def _run_linear_nm(args):
    defaults = {
        "omega": 1.0, "bloch": [1.0, 0.0, 0.0],
        "tmax": None, "steps": 101, "t": None,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    if res["t"] is None and res["tmax"] is None:
        res["tmax"] = 2.0 * math.pi / abs(res["omega"])
    cg = non_preferential(2)
    rho0 = qcore.density_from_bloch(_parse_bloch(res["bloch"]))
    spec = evolve.LocalZSecond(omega=res["omega"])
    traj = evolve.trajectory(rho0, cg, spec, _time_grid(res))
    _write_rows(res["output"], ["t", "rx", "ry", "rz", "purity"], _trajectory_rows(traj))
    center, radius = channels.circle_params(qcore.bloch_from_density(rho0))
    derived = dict(traj.metadata, circle_center=list(center), circle_radius=radius)
    _write_metadata(res, "linear-nm", derived)
    return 0


# ---------------------------------------------------------------------------
# Diagnostics battery


def _pipeline_closure(spec, cg):
    return lambda rho, t: evolve.gamma_t(rho, cg, spec, t)


def _static_closure(channel, cg):
    def dyn(rho, t):
        joint = maxent.assign(rho, cg).to_matrix()
        return apply_cg(channel(joint), cg)

    return dyn


def _run_diagnostics(args):
    defaults = {
        "target": "swap", "p1": 0.7, "n": 2, "omega": 1.0, "J": 1.0, "g": 0.0,
        "t": None, "tmax": math.pi, "steps": 25, "samples": 100, "seed": 0,
        "bloch": [0.6, 0.0, 0.5], "n_max": 8,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    target = res["target"]
    t_probe = float(res["t"]) if res["t"] is not None else math.pi / 2
    samples, seed = int(res["samples"]), int(res["seed"])
    tmax, steps = float(res["tmax"]), int(res["steps"])
    grid = np.linspace(tmax / steps, tmax, steps)
    report = {"target": target, "seed": seed, "version": __version__}

    if target in ("swap", "cnot", "ising", "linear-nm"):
        if target == "swap":
            cg = preferential(2, res["p1"])
            spec = evolve.Swap(omega=res["omega"])
        elif target == "cnot":
            cg = preferential(2, res["p1"])
            spec = evolve.Cnot(omega=res["omega"])
        elif target == "ising":
            n = int(res["n"])
            cg = non_preferential(n)
            spec = evolve.IsingChain(n_spins=n, J=res["J"], g=res["g"], boundary="closed")
        else:
            cg = non_preferential(2)
            spec = evolve.LocalZSecond(omega=res["omega"])
        dyn = _pipeline_closure(spec, cg)
        lin = diagnostics.linearity_probe(dyn, t_probe, samples=samples, seed=seed)
        mk = diagnostics.semigroup_gap(dyn, grid, grid, probes=8, seed=seed)
        if target == "swap":
            rho0 = qcore.density_from_bloch(_parse_bloch(res["bloch"]))
            r1, r2 = maxent.assign(rho0, cg).solution.per_particle_r
            rates = channels.swap_rate(grid, cg, r1, r2, omega=res["omega"])
            mk = dataclasses.replace(
                mk, rate_sign_changes=diagnostics.negative_rate_intervals(grid, rates)
            )
        if target == "linear-nm":
            # the probe the semigroup violation is sharpest on
            plus = qcore.density_from_bloch([1.0, 0.0, 0.0])
            tpi = math.pi / res["omega"]
            mk_plus = diagnostics.semigroup_gap(dyn, [tpi], [tpi], probes=[plus])
            report["gap_at_pi_on_plus"] = mk_plus.gap
        report["linearity"] = lin.to_dict()
        report["semigroup"] = mk.to_dict()
        rng = np.random.default_rng(seed)
        report["fuzzy_identity"] = diagnostics.fuzzy_identity_check(
            qcore.random_density(2 ** cg.n, rng), cg
        )
    elif target in ("total-dephasing", "pce-mask"):
        n = int(res["n"])
        if target == "total-dephasing":
            channel = channels.total_dephasing
        else:
            if n != 2:
                raise ValueError("the masked-component channel is two sites only")
            channel = lambda rho: channels.pauli_component_mask(
                rho, channels.DEPHASE_Y_MASK
            )
        eq = diagnostics.equal_marginal_check(channel, n, samples=samples // 5 or 1, seed=seed)
        report["equal_marginal"] = eq.to_dict()
        cg = non_preferential(n)
        lin = diagnostics.linearity_probe(
            _static_closure(channel, cg), 0.0, samples=samples, seed=seed
        )
        report["linearity"] = lin.to_dict()
    elif target == "dyson":
        bloch0 = _parse_bloch(res["bloch"])
        rho0 = qcore.density_from_bloch(bloch0)
        ns = list(range(2, int(res["n_max"]) + 1))
        norms = diagnostics.dyson_decay([non_preferential(n) for n in ns], rho0)
        report["dyson"] = {
            "n": ns,
            "trace_norms": [float(v) for v in norms],
            "ratios": [float(r) for r in norms[1:] / np.where(norms[:-1] == 0, 1, norms[:-1])],
        }
    else:
        raise ValueError(
            f"unknown diagnostics target {target!r}; pick from swap, cnot, ising, "
            "linear-nm, total-dephasing, pce-mask, dyson"
        )

    text = json.dumps(report, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if res["output"] == "-":
        sys.stdout.write(text)
    else:
        with open(res["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


# ---------------------------------------------------------------------------
# Initial-state sweeps


def fibonacci_sphere(count):
    """(theta, phi) pairs roughly evenly spread over the sphere."""
    if count < 1:
        raise ValueError("need at least one state")
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.mod(i * GOLDEN_ANGLE, 2.0 * math.pi)
    return np.column_stack([theta, phi])


def _sweep_states(res):
    explicit = res["state"]
    if explicit:
        out = []
        for item in explicit:
            if isinstance(item, str):
                parts = [float(p) for p in item.replace(",", " ").split() if p]
            else:
                parts = [float(p) for p in item]
            if len(parts) != 2:
                raise ValueError(f"state needs theta,phi; got {item!r}")
            out.append(parts)
        return np.asarray(out)
    return fibonacci_sphere(int(res["states"]))


def _run_sweep(args):
    defaults = {
        "states": 64, "state": None,
        "n_spins": 4, "J": 1.0, "g": 0.0, "boundary": "closed",
        "p1": None, "probs": None,
        "tmax": None, "steps": 2, "t": 0.9,
        "output": "-", "metadata": None,
    }
    res = _resolve(args, defaults)
    n = int(res["n_spins"])
    spec = evolve.IsingChain(n_spins=n, J=res["J"], g=res["g"], boundary=res["boundary"])
    cg = _distribution(n, res["p1"] if res["probs"] is None else None, res["probs"])
    if res["tmax"] is not None:
        res = dict(res, t=None)
    times = _time_grid(res)
    states = _sweep_states(res)

    def one(th, ph):
        bloch0 = np.array(
            [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
        )
        traj = evolve.trajectory(qcore.density_from_bloch(bloch0), cg, spec, times)
        return traj.bloch, traj.purity

    env = os.environ.get("CGDYN_NUM_THREADS", "")
    workers = int(env) if env else None
    if workers is not None and workers < 1:
        raise ValueError(f"CGDYN_NUM_THREADS must be positive, got {env!r}")

    rows = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(one, th, ph) for th, ph in states]
        # iterate in submission order so output order never depends on timing
        for idx, fut in enumerate(futures):
            bloch, purity = fut.result()
            th, ph = states[idx]
            for t, b, p in zip(times, bloch, purity):
                rows.append((idx, th, ph, t, b[0], b[1], b[2], p))

    header = ["state", "theta", "phi", "t", "rx", "ry", "rz", "purity"]
    _write_rows(res["output"], header, rows)
    derived = {
        "spec": evolve.spec_to_dict(spec),
        "distribution": {"n": cg.n, "probs": [float(p) for p in cg.probs]},
        "states": int(states.shape[0]),
        "workers": workers if workers is not None else "default",
    }
    _write_metadata(res, "sweep", derived)
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(sub):
    sub.add_argument("--config", help="JSON file with config values (flags override)")
    sub.add_argument("--output", "-o", help="CSV path, or - for stdout (default -)")
    sub.add_argument("--metadata", help="metadata JSON path (default: next to the CSV)")
    sub.add_argument("--tmax", help="grid endpoint; field runs accept a 'tc' suffix")
    sub.add_argument("--steps", type=int, help="number of grid points, endpoints included")
    sub.add_argument("--t", type=float, help="single evaluation time instead of a grid")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cgdyn",
        description="Effective single-qubit dynamics of coarse-grained many-qubit systems",
    )
    parser.add_argument("--version", action="version", version=f"cgdyn {__version__}")
    subs = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")

    sw = subs.add_parser("swap-kappa", help="exchange model with kappa and rate columns")
    sw.add_argument("--p1", type=float, help="first-site weight (default 0.7)")
    sw.add_argument("--probs", help="explicit weights, e.g. '0.7,0.3'")
    sw.add_argument("--omega", type=float, help="exchange frequency (default 1.0)")
    sw.add_argument("--bloch", help="initial effective state 'rx,ry,rz'")
    _add_common(sw)
    sw.set_defaults(run=_run_swap)

    cn = subs.add_parser("cnot", help="conditional-flip model trajectory")
    cn.add_argument("--p1", type=float)
    cn.add_argument("--probs")
    cn.add_argument("--omega", type=float)
    cn.add_argument("--bloch")
    _add_common(cn)
    cn.set_defaults(run=_run_cnot)

    fd = subs.add_parser("field", help="random local frequencies, optional n-body term")
    fd.add_argument("--n", type=int, help="number of sites (default 10)")
    fd.add_argument("--p1", type=float, help="first-site weight (default 0.5)")
    fd.add_argument("--probs")
    fd.add_argument("--mu", type=float, help="frequency mean (default 1.5)")
    fd.add_argument("--sigma", type=float, help="frequency spread (default 0.2)")
    fd.add_argument("--seed", type=int, help="frequency-draw seed (default 0)")
    fd.add_argument(
        "--interaction", action=argparse.BooleanOptionalAction, default=None,
        help="include the n-body term (default off)",
    )
    fd.add_argument("--bloch")
    _add_common(fd)
    fd.set_defaults(run=_run_field)

    isg = subs.add_parser("ising", help="transverse-field chain trajectory")
    isg.add_argument("--n-spins", dest="n_spins", type=int, help="chain length (default 4)")
    isg.add_argument("--J", type=float, help="coupling (default 1.0)")
    isg.add_argument("--g", type=float, help="transverse field (default 0.0)")
    isg.add_argument("--boundary", choices=["closed", "open"], help="default closed")
    isg.add_argument("--p1", type=float)
    isg.add_argument("--probs")
    isg.add_argument("--theta", type=float, help="initial polar angle (default pi/2)")
    isg.add_argument("--phi", type=float, help="initial azimuth (default 0)")
    isg.add_argument("--bloch", help="mixed initial state; overrides theta/phi")
    _add_common(isg)
    isg.set_defaults(run=_run_ising)

    nm = subs.add_parser("linear-nm", help="local-field model, linear but memoryful")
    nm.add_argument("--omega", type=float)
    nm.add_argument("--bloch")
    _add_common(nm)
    nm.set_defaults(run=_run_linear_nm)

    dg = subs.add_parser("diagnostics", help="linearity/memory probe battery as JSON")
    dg.add_argument(
        "--target",
        choices=["swap", "cnot", "ising", "linear-nm", "total-dephasing", "pce-mask", "dyson"],
    )
    dg.add_argument("--p1", type=float)
    dg.add_argument("--n", type=int, help="sites for channel targets (default 2)")
    dg.add_argument("--omega", type=float)
    dg.add_argument("--J", type=float)
    dg.add_argument("--g", type=float)
    dg.add_argument("--samples", type=int, help="probe count (default 100)")
    dg.add_argument("--seed", type=int)
    dg.add_argument("--bloch", help="probe state for swap rates / dyson decay")
    dg.add_argument("--n-max", dest="n_max", type=int, help="largest n for dyson decay")
    _add_common(dg)
    dg.set_defaults(run=_run_diagnostics)

    sp = subs.add_parser("sweep", help="many initial pure states through one model")
    sp.add_argument("--states", type=int, help="Fibonacci-sphere state count (default 64)")
    sp.add_argument(
        "--state", action="append",
        help="explicit 'theta,phi' pair; repeat for a list (overrides --states)",
    )
    sp.add_argument("--n-spins", dest="n_spins", type=int)
    sp.add_argument("--J", type=float)
    sp.add_argument("--g", type=float)
    sp.add_argument("--boundary", choices=["closed", "open"])
    sp.add_argument("--p1", type=float)
    sp.add_argument("--probs")
    _add_common(sp)
    sp.set_defaults(run=_run_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; our contract reserves 2 for
        # numeric failure, so fold usage problems into the validation code
        return 0 if exc.code == 0 else 1
    try:
        return args.run(args)
    except qcore.PositivityError as exc:
        print(f"cgdyn: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"cgdyn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

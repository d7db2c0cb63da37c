"""Reproducible control studies over the weighted solvers.

Six registered experiments train the network weight against a cost and
write their results to disk:

- ``point_value_lsq``: boundary-layer problem, weighted least squares,
  point-value misfit at the first node; sweeps the weight range M and the
  regularization alpha.
- ``point_value_minres``: same study with the discrete-dual minimal
  residual solver (piecewise-constant trial, refined P1 test space).
- ``weight_convergence``: smooth advection problem where the optimal
  weight is known in closed form; sweeps the network width n and reports
  the L2 distance to the optimal control together with a fitted log-log
  rate.
- ``total_variation``: unsupervised overshoot control, minimizing the
  total variation of u_h over the boundary-layer problem.
- ``l1_residual_1d`` / ``l1_residual_2d``: overconstrained advection-
  reaction problems where a smoothed L1 residual cost steers the weighted
  least-squares solution toward the vanishing-viscosity profile.

Each variant of a sweep lands in its own subdirectory (``M_100/``,
``alpha_0.01/``, ``n_16/``) holding ``trace.csv`` (iteration history),
``solution.csv`` (sampled discrete solution), and ``summary.json``; a
merged ``summary.json`` at the experiment root aggregates the variants.
Runs are deterministic for a fixed seed, and rerunning into the same
directory overwrites the previous artifacts.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .costs import cost_from_config
from .errors import ConfigError
from .meshing import build_crisscross_mesh, build_uniform_mesh_1d
from .network import nn_forward, nn_interpolate_init, random_net
from .optimize import OptimConfig, quasi_minimize, trace_to_csv
from .problems import (
    boundary_layer_1d,
    exact_values,
    overconstrained_1d,
    overconstrained_2d,
    sine_advection_1d,
)
from .solvers import build_system
from .spaces import eval_fe, full_node_values
from .weights import constant, weight_from_config

MAX_SWEEP_WORKERS = 4


def optimal_control_profile(x):
    """Closed-form optimal control for the smooth advection study.

    The weighted least-squares problem with bounded logistic weight and
    the (1 + sin(pi x / 2))-weighted residual cost share their minimizer
    when the weight reproduces the cost's own weighting; inverting the
    bounded logistic map at that weight gives this profile.
    """
    s = np.sin(0.5 * np.pi * np.asarray(x, dtype=float))
    return -np.log(2.0 / (s + 0.5) - 1.0)


def control_error_l2(net, n_cells=256):
    """L2 distance between a network and the closed-form optimal control."""
    pts, wts = leggauss(3)
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * pts).ravel()
    w = (half[:, None] * np.broadcast_to(wts, (n_cells, wts.size))).ravel()
    d = nn_forward(net, x) - optimal_control_profile(x)
    return float(np.sqrt(np.sum(w * d * d)))


# ---------------------------------------------------------------------------
# config plumbing


def _merge_config(defaults, override):
    if override is None:
        return {k: dict(v) for k, v in defaults.items()}
    unknown = set(override) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    merged = {}
    for section, base in defaults.items():
        merged[section] = dict(base)
        user = override.get(section, {})
        if not isinstance(user, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        if section in ("problem", "experiment"):
            bad = set(user) - set(base)
            if bad:
                raise ConfigError(f"unknown [{section}] keys {sorted(bad)}")
        merged[section].update(user)
    return merged


def _optim_from_config(section):
    known = {f for f in OptimConfig.__dataclass_fields__}
    bad = set(section) - known
    if bad:
        raise ConfigError(f"unknown [optimizer] keys {sorted(bad)}")
    try:
        return OptimConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad optimizer config: {exc}") from exc


def _build_cost(section, **overrides):
    try:
        return cost_from_config({**section, **overrides})
    except ValueError as exc:
        raise ConfigError(f"bad cost config: {exc}") from exc


def _build_weight(section, **overrides):
    try:
        return weight_from_config({**section, **overrides})
    except ValueError as exc:
        raise ConfigError(f"bad weight config: {exc}") from exc


def _fmt(value):
    if float(value) == int(value):
        return str(int(value))
    return f"{value:g}"


# ---------------------------------------------------------------------------
# artifact writers and summary metrics


def _sample_points_1d(mesh, per_element):
    segs = [
        np.linspace(mesh.nodes[i], mesh.nodes[i + 1], per_element)
        for i in range(mesh.n_elements)
    ]
    return np.unique(np.concatenate(segs))


def _write_solution_1d(path, sol, problem, per_element):
    x = _sample_points_1d(sol.u.space.mesh, per_element)
    uh = eval_fe(sol.u, x)
    ue = exact_values(problem, x)
    cols = [x, uh, np.full_like(x, np.nan) if ue is None else ue]
    np.savetxt(
        path,
        np.column_stack(cols),
        delimiter=",",
        header="x,u_h,u_exact",
        comments="",
        fmt="%.16e",
    )
    return x, uh, ue


def _write_solution_2d(path, sol, problem):
    mesh = sol.u.space.mesh
    uh = full_node_values(sol.u)
    ue = exact_values(problem, mesh.vertices)
    cols = [mesh.vertices[:, 0], mesh.vertices[:, 1], uh, ue]
    np.savetxt(
        path,
        np.column_stack(cols),
        delimiter=",",
        header="x,y,u_h,u_exact",
        comments="",
        fmt="%.16e",
    )
    return mesh.vertices, uh, ue


def _overshoot(uh, ue):
    if ue is None:
        return None
    return float(np.max(uh) - np.max(ue))


def _solution_errors(system, sol, interior_cutoff=None):
    """L1/L2 distance of u_h to the problem's exact/reference solution.

    With ``interior_cutoff`` the distances are also reported restricted to
    quadrature points whose x-coordinate stays below the cutoff (used for
    overconstrained problems whose reference only holds away from the
    outflow layer).
    """
    grid = system.cost_grid()
    xflat = grid.x if grid.x.ndim == 1 else grid.x[:, 0]
    ue = exact_values(system.problem, grid.x)
    if ue is None:
        return {}
    diff = np.abs(grid.value @ sol.u.coeffs - ue)
    out = {
        "l1_error": float(np.sum(grid.w * diff)),
        "l2_error": float(np.sqrt(np.sum(grid.w * diff**2))),
    }
    if interior_cutoff is not None:
        m = xflat <= interior_cutoff
        out["l1_error_interior"] = float(np.sum(grid.w[m] * diff[m]))
        out["l2_error_interior"] = float(np.sqrt(np.sum(grid.w[m] * diff[m] ** 2)))
    return out


def _point_value_error(system, sol, cost):
    from .costs import _point_datum, _point_row

    q = float(_point_row(cost, system) @ sol.u.coeffs)
    return abs(q - _point_datum(cost, system))


def _cost_ratio(trace):
    j0, j1 = trace.initial_cost, trace.final_cost
    if j1 <= 0.0:
        return 1e300
    return min(j0 / j1, 1e300)


def _variant_summary(name, trace, seed, extra):
    out = {
        "variant": name,
        "seed": seed,
        "initial_cost": trace.initial_cost,
        "final_cost": trace.final_cost,
        "cost_ratio": _cost_ratio(trace),
        "grad_norm_final": float(trace.grad_norm[-1]),
        "xi_l2": float(trace.xi_l2[-1]),
        "iterations": int(trace.iters[-1]) + 1,
    }
    out.update(extra)
    return out


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_variants(variants, worker):
    """Run (name, payload) variants on a bounded pool, in declared order."""
    if len(variants) == 1:
        name, payload = variants[0]
        return [worker(name, payload)]
    results = {}
    with ThreadPoolExecutor(max_workers=min(MAX_SWEEP_WORKERS, len(variants))) as pool:
        futures = {name: pool.submit(worker, name, payload) for name, payload in variants}
        for name, fut in futures.items():
            results[name] = fut.result()
    return [results[name] for name, _ in variants]


# ---------------------------------------------------------------------------
# experiment bodies


def _train_and_write(system, cost, net0, optim, vdir, problem, per_element, extra_metrics):
    vdir.mkdir(parents=True, exist_ok=True)
    trace = quasi_minimize(system, cost, net0, optim)
    sol = system.solve(trace.net)
    trace_to_csv(trace, vdir / "trace.csv")
    if problem.dim == 1:
        _, uh, ue = _write_solution_1d(vdir / "solution.csv", sol, problem, per_element)
    else:
        _, uh, ue = _write_solution_2d(vdir / "solution.csv", sol, problem)
    metrics = {"max_overshoot": _overshoot(uh, ue)}
    metrics.update(extra_metrics(system, sol, trace))
    return trace, sol, metrics


def _point_value_variants(exp):
    variants = []
    for m in exp["m_values"]:
        variants.append((f"M_{_fmt(m)}", {"M": m, "alpha": None}))
    for a in exp["alpha_values"]:
        variants.append((f"alpha_{_fmt(a)}", {"M": exp["base_m"], "alpha": a}))
    return variants


def _run_point_value(cfg, out, solver_kind):
    prob = cfg["problem"]
    exp = cfg["experiment"]
    problem = boundary_layer_1d(sigma=prob["sigma"])
    mesh = build_uniform_mesh_1d(prob["n_elements"])
    x0 = cfg["cost"]["x0"]
    if x0 is None:
        x0 = 1.0 / prob["n_elements"]
    optim = _optim_from_config(cfg["optimizer"])
    variants = _point_value_variants(exp)

    def worker(name, payload):
        idx = [v[0] for v in variants].index(name)
        seed = exp["seed"] + idx
        weight = _build_weight(cfg["weight"], M=payload["M"])
        overrides = {"x0": x0}
        if payload["alpha"] is not None:
            overrides["alpha"] = payload["alpha"]
        cost = _build_cost(cfg["cost"], **overrides)
        system = build_system(solver_kind, problem, mesh, weight)
        net0 = random_net(exp["n_neurons"], seed=seed)
        trace, sol, metrics = _train_and_write(
            system,
            cost,
            net0,
            optim,
            out / name,
            problem,
            exp["samples_per_element"],
            lambda sy, so, tr: {
                "point_value_error": _point_value_error(sy, so, cost),
                **_solution_errors(sy, so),
            },
        )
        return _variant_summary(name, trace, seed, metrics)

    rows = _run_variants(variants, worker)
    return {
        "experiment": f"point_value_{solver_kind if solver_kind == 'lsq' else 'minres'}",
        "solver": solver_kind,
        "x0": x0,
        "seed": exp["seed"],
        "variants": rows,
        "best_cost_ratio": max(r["cost_ratio"] for r in rows),
    }


def _run_weight_convergence(cfg, out):
    prob = cfg["problem"]
    exp = cfg["experiment"]
    problem = sine_advection_1d()
    mesh = build_uniform_mesh_1d(prob["n_elements"])
    optim = _optim_from_config(cfg["optimizer"])
    weight = _build_weight(cfg["weight"])
    cost = _build_cost(cfg["cost"])
    variants = [(f"n_{n}", {"n": n}) for n in exp["n_values"]]

    def worker(name, payload):
        n = payload["n"]
        system = build_system("lsq", problem, mesh, weight)
        net0 = nn_interpolate_init(optimal_control_profile, n)
        trace, sol, metrics = _train_and_write(
            system,
            cost,
            net0,
            optim,
            out / name,
            problem,
            exp["samples_per_element"],
            lambda sy, so, tr: {
                "n_neurons": n,
                "xi_error_l2": control_error_l2(tr.net),
                "xi_error_init_l2": control_error_l2(net0),
                **_solution_errors(sy, so),
            },
        )
        return _variant_summary(name, trace, exp["seed"], metrics)

    rows = _run_variants(variants, worker)
    ns = np.asarray([r["n_neurons"] for r in rows], dtype=float)
    errs = np.asarray([r["xi_error_l2"] for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    np.savetxt(
        out / "convergence.csv",
        np.column_stack([ns, errs]),
        delimiter=",",
        header="n,xi_error_l2",
        comments="",
        fmt=["%d", "%.16e"],
    )
    return {
        "experiment": "weight_convergence",
        "seed": exp["seed"],
        "n_values": [int(n) for n in ns],
        "xi_errors_l2": [float(e) for e in errs],
        "fitted_slope": slope,
        "variants": rows,
    }


def _run_total_variation(cfg, out):
    prob = cfg["problem"]
    exp = cfg["experiment"]
    problem = boundary_layer_1d(sigma=prob["sigma"])
    mesh = build_uniform_mesh_1d(prob["n_elements"])
    optim = _optim_from_config(cfg["optimizer"])
    weight = _build_weight(cfg["weight"])
    variants = [(f"alpha_{_fmt(a)}", {"alpha": a}) for a in exp["alpha_values"]]

    def worker(name, payload):
        idx = [v[0] for v in variants].index(name)
        seed = exp["seed"] + idx
        cost = _build_cost(cfg["cost"], alpha=payload["alpha"])
        system = build_system("lsq", problem, mesh, weight)
        net0 = random_net(exp["n_neurons"], seed=seed)
        trace, sol, metrics = _train_and_write(
            system,
            cost,
            net0,
            optim,
            out / name,
            problem,
            exp["samples_per_element"],
            lambda sy, so, tr: _solution_errors(sy, so),
        )
        return _variant_summary(name, trace, seed, metrics)

    rows = _run_variants(variants, worker)
    return {
        "experiment": "total_variation",
        "seed": exp["seed"],
        "variants": rows,
        "best_cost_ratio": max(r["cost_ratio"] for r in rows),
    }


def _l1_baseline(problem, mesh, solver_kind, interior_cutoff):
    """Constant-weight least-squares reference for the L1 studies."""
    system = build_system(solver_kind, problem, mesh, constant(1.0))
    sol = system.solve(random_net(1, input_dim=problem.dim, seed=0))
    return _solution_errors(system, sol, interior_cutoff)


def _run_l1_residual_1d(cfg, out):
    prob = cfg["problem"]
    exp = cfg["experiment"]
    problem = overconstrained_1d()
    mesh = build_uniform_mesh_1d(prob["n_elements"])
    h = 1.0 / prob["n_elements"]
    optim = _optim_from_config(cfg["optimizer"])
    weight = _build_weight(cfg["weight"])
    baseline = _l1_baseline(problem, mesh, "lsq", 1.0 - h)
    variants = [(f"alpha_{_fmt(a)}", {"alpha": a}) for a in exp["alpha_values"]]

    def worker(name, payload):
        idx = [v[0] for v in variants].index(name)
        seed = exp["seed"] + idx
        cost = _build_cost(cfg["cost"], alpha=payload["alpha"])
        system = build_system("lsq", problem, mesh, weight)
        net0 = random_net(exp["n_neurons"], seed=seed)
        trace, sol, metrics = _train_and_write(
            system,
            cost,
            net0,
            optim,
            out / name,
            problem,
            exp["samples_per_element"],
            lambda sy, so, tr: _solution_errors(sy, so, interior_cutoff=1.0 - h),
        )
        return _variant_summary(name, trace, seed, metrics)

    rows = _run_variants(variants, worker)
    return {
        "experiment": "l1_residual_1d",
        "seed": exp["seed"],
        "baseline_l1_error_interior": baseline["l1_error_interior"],
        "variants": rows,
        "best_cost_ratio": max(r["cost_ratio"] for r in rows),
    }


def _run_l1_residual_2d(cfg, out):
    prob = cfg["problem"]
    exp = cfg["experiment"]
    problem = overconstrained_2d()
    mesh = build_crisscross_mesh(prob["nx"])
    h = 1.0 / prob["nx"]
    optim = _optim_from_config(cfg["optimizer"])
    weight = _build_weight(cfg["weight"])
    baseline = _l1_baseline(problem, mesh, "lsq", 1.0 - h)
    variants = [(f"alpha_{_fmt(a)}", {"alpha": a}) for a in exp["alpha_values"]]

    def worker(name, payload):
        idx = [v[0] for v in variants].index(name)
        seed = exp["seed"] + idx
        cost = _build_cost(cfg["cost"], alpha=payload["alpha"])
        system = build_system("lsq", problem, mesh, weight)
        net0 = random_net(exp["n_neurons"], input_dim=2, seed=seed)
        trace, sol, metrics = _train_and_write(
            system,
            cost,
            net0,
            optim,
            out / name,
            problem,
            exp["samples_per_element"],
            lambda sy, so, tr: _solution_errors(sy, so, interior_cutoff=1.0 - h),
        )
        return _variant_summary(name, trace, seed, metrics)

    rows = _run_variants(variants, worker)
    return {
        "experiment": "l1_residual_2d",
        "seed": exp["seed"],
        "baseline_l1_error_interior": baseline["l1_error_interior"],
        "variants": rows,
        "best_cost_ratio": max(r["cost_ratio"] for r in rows),
    }


# ---------------------------------------------------------------------------
# registry


def _defaults_point_value():
    return {
        "problem": {"sigma": 160.0, "n_elements": 16},
        "weight": {"kind": "logistic_offset", "M": 100.0},
        "cost": {"cost": "point_value", "x0": None, "target": "exact", "alpha": 0.0},
        "optimizer": {"method": "adam", "learning_rate": 1e-1, "max_iters": 1500},
        "experiment": {
            "seed": 0,
            "n_neurons": 8,
            "m_values": [1.0, 10.0, 100.0],
            "alpha_values": [0.0, 1e-3, 1e-2, 1e-1],
            "base_m": 100.0,
            "samples_per_element": 10,
        },
    }


EXPERIMENTS = {
    "point_value_lsq": (
        lambda cfg, out: _run_point_value(cfg, out, "lsq"),
        _defaults_point_value,
    ),
    "point_value_minres": (
        lambda cfg, out: _run_point_value(cfg, out, "ddminres"),
        _defaults_point_value,
    ),
    "weight_convergence": (
        _run_weight_convergence,
        lambda: {
            "problem": {"n_elements": 16},
            "weight": {"kind": "bounded_logistic"},
            "cost": {
                "cost": "weighted_residual_l2",
                "omega_bar": "one_plus_sine",
                "alpha": 0.0,
            },
            # Short, small-step schedule: the cost is flat along a large
            # set of equivalent weights, and long runs wander away from
            # the closed-form control without improving the cost.
            "optimizer": {"method": "adam", "learning_rate": 1e-4, "max_iters": 30},
            "experiment": {
                "seed": 0,
                "n_values": [4, 8, 16, 32, 64],
                "samples_per_element": 10,
            },
        },
    ),
    "total_variation": (
        _run_total_variation,
        lambda: {
            "problem": {"sigma": 160.0, "n_elements": 16},
            "weight": {"kind": "logistic_offset", "M": 100.0},
            "cost": {"cost": "total_variation", "eps": 1e-8},
            "optimizer": {"method": "adam", "learning_rate": 3e-2, "max_iters": 500},
            "experiment": {
                "seed": 0,
                "n_neurons": 8,
                "alpha_values": [0.0, 1e-2, 1e-1, 1.0],
                "samples_per_element": 10,
            },
        },
    ),
    "l1_residual_1d": (
        _run_l1_residual_1d,
        lambda: {
            "problem": {"n_elements": 8},
            "weight": {"kind": "logistic_offset", "M": 1000.0},
            "cost": {"cost": "residual_l1", "eps": 1e-8},
            "optimizer": {"method": "adam", "learning_rate": 5e-2, "max_iters": 800},
            "experiment": {
                "seed": 0,
                "n_neurons": 8,
                "alpha_values": [1e-4, 1e-2, 1.0],
                "samples_per_element": 10,
            },
        },
    ),
    "l1_residual_2d": (
        _run_l1_residual_2d,
        lambda: {
            "problem": {"nx": 8},
            "weight": {"kind": "logistic_offset", "M": 1000.0},
            "cost": {"cost": "residual_l1", "eps": 1e-8},
            "optimizer": {"method": "adam", "learning_rate": 3e-2, "max_iters": 400},
            "experiment": {
                "seed": 0,
                "n_neurons": 8,
                "alpha_values": [0.0],
                "samples_per_element": 10,
            },
        },
    ),
}


def experiment_names():
    return sorted(EXPERIMENTS)


def run_experiment(name, config=None, out_dir=".", seed=None):
    """Run one registered experiment and return its merged summary.

    ``config`` overrides the experiment's defaults section by section;
    ``seed`` overrides the experiment seed.  All artifacts are written
    below ``out_dir`` before the summary is returned.
    """
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; known: {', '.join(experiment_names())}"
        )
    runner, make_defaults = EXPERIMENTS[name]
    cfg = _merge_config(make_defaults(), config)
    if seed is not None:
        cfg["experiment"]["seed"] = int(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = runner(cfg, out)
    _write_json(out / "summary.json", summary)
    return summary

"""Reduced-cost optimization of the network control.

The reduced cost j(xi) eliminates the state: solve the weighted problem at
xi, evaluate the cost on the solution, and add the regularizer.  Its
parameter gradient costs one extra transposed (adjoint) solve reusing the
state factorization.  Training runs plain first-order updates (Adam by
default) and returns the best-seen iterate, not the last one.
"""

import time
from dataclasses import dataclass

import numpy as np

from .costs import cost_eval, cost_grad_u, cost_grad_xi_reg, xi_l2_norm
from .errors import DivergedError
from .network import from_vector, to_vector

OPTIM_METHODS = ("adam", "gd")


@dataclass(frozen=True)
class OptimConfig:
    method: str = "adam"
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    max_iters: int = 200
    grad_tolerance: float = 0.0
    seed: int = 0
    trace_every: int = 1

    def __post_init__(self):
        if self.method not in OPTIM_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.trace_every < 1:
            raise ValueError("trace_every must be at least 1")


@dataclass
class TrainTrace:
    """Recorded training history.

    ``cost`` holds the monotone best-seen envelope; ``grad_norm`` and
    ``xi_l2`` describe the iterate at each recorded iteration.  ``net`` is
    the best-seen network.
    """

    iters: np.ndarray
    cost: np.ndarray
    grad_norm: np.ndarray
    xi_l2: np.ndarray
    net: object
    wall_time: float
    raw_cost: np.ndarray = None

    @property
    def final_cost(self):
        return float(self.cost[-1])

    @property
    def initial_cost(self):
        return float(self.raw_cost[0]) if self.raw_cost is not None else float(self.cost[0])


def trace_to_csv(trace, path):
    data = np.column_stack([trace.iters, trace.cost, trace.grad_norm, trace.xi_l2])
    np.savetxt(
        path,
        data,
        delimiter=",",
        header="iter,cost,grad_norm,xi_l2",
        comments="",
        fmt=["%d", "%.16e", "%.16e", "%.16e"],
    )


def reduced_cost(system, cost, xi):
    """j(xi): solve the state problem at xi and evaluate the cost."""
    return cost_eval(cost, system.solve(xi), xi)


def reduced_gradient(system, cost, xi):
    """Parameter gradient of the reduced cost via one adjoint solve."""
    sol = system.solve(xi)
    grad = system.adjoint_gradient(sol, cost_grad_u(cost, sol))
    return grad + cost_grad_xi_reg(cost, xi, system)


def reduced_cost_and_gradient(system, cost, xi):
    """One state solve shared between the cost value and its gradient."""
    sol = system.solve(xi)
    j = cost_eval(cost, sol, xi)
    grad = system.adjoint_gradient(sol, cost_grad_u(cost, sol))
    return j, grad + cost_grad_xi_reg(cost, xi, system)


def quasi_minimize(system, cost, xi0, config):
    """First-order minimization of the reduced cost from xi0.

    Stops at the iteration budget or when the gradient norm falls to
    ``grad_tolerance``.  Raises :class:`DivergedError` (carrying the trace
    so far) if the cost or gradient turns non-finite.
    """
    t0 = time.perf_counter()
    theta = to_vector(xi0)
    n, d = xi0.n_neurons, xi0.input_dim
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    lr, b1, b2 = config.learning_rate, config.beta1, config.beta2

    best_cost = np.inf
    best_theta = theta.copy()
    rows = []

    def build_trace():
        rec = np.asarray(rows, dtype=float) if rows else np.zeros((0, 5))
        return TrainTrace(
            iters=rec[:, 0].astype(int),
            cost=rec[:, 1],
            grad_norm=rec[:, 2],
            xi_l2=rec[:, 3],
            raw_cost=rec[:, 4],
            net=from_vector(best_theta, n, d),
            wall_time=time.perf_counter() - t0,
        )

    for k in range(config.max_iters):
        net = from_vector(theta, n, d)
        j, grad = reduced_cost_and_gradient(system, cost, net)
        if not (np.isfinite(j) and np.all(np.isfinite(grad))):
            raise DivergedError(f"non-finite cost or gradient at iteration {k}", trace=build_trace())
        if j < best_cost:
            best_cost = j
            best_theta = theta.copy()
        gnorm = float(np.linalg.norm(grad))
        if k % config.trace_every == 0 or k == config.max_iters - 1 or gnorm <= config.grad_tolerance:
            rows.append((k, best_cost, gnorm, xi_l2_norm(system, net), j))
        if gnorm <= config.grad_tolerance:
            break
        if config.method == "adam":
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            mhat = m / (1 - b1 ** (k + 1))
            vhat = v / (1 - b2 ** (k + 1))
            theta = theta - lr * mhat / (np.sqrt(vhat) + config.eps_adam)
        else:
            theta = theta - lr * grad
    return build_trace()


def toy_quasi_optimality_check(dimension=5, subspace_dim=2, n_trials=100, seed=0):
    """Check the quasi-optimality bound on synthetic convex quadratics.

    For j(x) = (1/2)(x - xbar)^T H (x - xbar) with spectrum in [gamma, L]
    and a random linear subspace standing in for the approximation set, any
    delta-quasi-minimizer x satisfies

        ||x - xbar|| <= sqrt(L/gamma * dist(xbar, V)^2 + delta/gamma).

    The subspace infimum is computed exactly (normal equations) and each
    trial draws a verified quasi-minimizer at a random depth below delta/2.
    """
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_trials):
        evals = rng.uniform(0.5, 5.0, size=dimension)
        Q, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
        H = (Q * evals) @ Q.T
        gamma, L = float(evals.min()), float(evals.max())
        xbar = rng.standard_normal(dimension)

        V, _ = np.linalg.qr(rng.standard_normal((dimension, subspace_dim)))
        cstar = np.linalg.solve(V.T @ H @ V, V.T @ (H @ xbar))
        xstar = V @ cstar
        jstar = 0.5 * (xstar - xbar) @ H @ (xstar - xbar)

        delta = rng.uniform(1e-6, 1.0)
        w = V @ rng.standard_normal(subspace_dim)
        depth = rng.uniform(0.0, 1.0) * delta  # j(xq) - jstar = depth/2
        t = np.sqrt(depth / (w @ H @ w))
        xq = xstar + t * w
        jq = 0.5 * (xq - xbar) @ H @ (xq - xbar)
        assert jq <= jstar + delta / 2 + 1e-12  # verified quasi-minimizer

        dist = np.linalg.norm(xbar - V @ (V.T @ xbar))
        bound = np.sqrt(L / gamma * dist**2 + delta / gamma)
        ratios.append(np.linalg.norm(xq - xbar) / bound)
    ratios = np.asarray(ratios)
    return {
        "n_trials": n_trials,
        "max_ratio": float(ratios.max()),
        "all_within_bound": bool(np.all(ratios <= 1.0 + 1e-12)),
    }

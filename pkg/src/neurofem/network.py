"""Shallow ReLU networks used as spatial control fields.

A network with ``n`` neurons on d-dimensional input evaluates

    xi(x) = sum_j c_j * relu(W[j] . x + b[j])

Parameters travel as one flat vector in the fixed order
``[W row-major, b, c]`` of length ``n * (d + 2)``.  The ReLU subgradient at
zero is taken to be zero throughout.
"""

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class ShallowNet:
    """One-hidden-layer ReLU network with linear output layer."""

    W: np.ndarray  # (n, d)
    b: np.ndarray  # (n,)
    c: np.ndarray  # (n,)

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        n, d = self.W.shape
        if d not in (1, 2):
            raise ValueError("input dimension must be 1 or 2")
        if self.b.shape != (n,) or self.c.shape != (n,):
            raise ValueError("inconsistent parameter shapes")

    @property
    def n_neurons(self):
        return self.W.shape[0]

    @property
    def input_dim(self):
        return self.W.shape[1]

    @property
    def n_params(self):
        n, d = self.W.shape
        return n * (d + 2)

    def __call__(self, x):
        return nn_forward(self, x)


def to_vector(net):
    """Flatten parameters in the canonical [W, b, c] order."""
    return np.concatenate([net.W.ravel(), net.b, net.c])


def from_vector(theta, n_neurons, input_dim=1):
    theta = np.asarray(theta, dtype=float)
    n, d = n_neurons, input_dim
    if theta.shape != (n * (d + 2),):
        raise ValueError(f"expected {n * (d + 2)} parameters, got {theta.shape}")
    W = theta[: n * d].reshape(n, d)
    b = theta[n * d : n * d + n]
    c = theta[n * d + n :]
    return ShallowNet(W=W, b=b, c=c)


def _preactivations(net, x):
    """(m, n) preactivations for points shaped (m,) in 1D or (m, d) in 2D."""
    x = np.asarray(x, dtype=float)
    if net.input_dim == 1:
        pts = np.atleast_1d(x).reshape(-1, 1)
    else:
        pts = np.atleast_2d(x)
    return pts, pts @ net.W.T + net.b[None, :]


def nn_forward(net, x):
    """Evaluate the network; scalar/point in, scalar out, batch in, batch out."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 if net.input_dim == 1 else x.ndim == 1
    _, z = _preactivations(net, x)
    out = np.maximum(z, 0.0) @ net.c
    return float(out[0]) if scalar else out


def nn_forward_dx(net, x):
    """Spatial derivative of the network (gradient in 2D).

    Piecewise constant; at a kink the active-side convention follows the
    ReLU subgradient choice (zero at zero).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 if net.input_dim == 1 else x.ndim == 1
    _, z = _preactivations(net, x)
    act = (z > 0.0).astype(float)  # (m, n)
    g = (act * net.c[None, :]) @ net.W  # (m, d)
    if net.input_dim == 1:
        g = g[:, 0]
        return float(g[0]) if scalar else g
    return g[0] if scalar else g


def nn_param_gradient(net, x):
    """Gradient of xi(x) at one point with respect to the flat parameter vector."""
    x = np.asarray(x, dtype=float)
    batch = x[None] if net.input_dim == 2 else np.atleast_1d(x)
    return nn_param_gradient_batch(net, batch)[0]


def nn_param_gradient_batch(net, x):
    """Per-point parameter gradients, shape (m, n_params).

    Columns follow the canonical [W, b, c] layout; rows are input points.
    """
    pts, z = _preactivations(net, x)
    act = (z > 0.0).astype(float)  # (m, n)
    relu = np.maximum(z, 0.0)
    ca = act * net.c[None, :]  # (m, n)
    dW = ca[:, :, None] * pts[:, None, :]  # (m, n, d)
    m = len(pts)
    return np.concatenate([dW.reshape(m, -1), ca, relu], axis=1)


def nn_param_gradient_dx_batch(net, x):
    """Per-point parameter gradients of the spatial derivative, 1D networks.

    Shape (m, n_params): column k holds d/dtheta_k of xi'(x).  Away from
    kinks, xi'(x) = sum_j c_j W_j 1[z_j > 0], so dW_j -> c_j 1[z_j>0],
    db_j -> 0, dc_j -> W_j 1[z_j>0] almost everywhere.
    """
    if net.input_dim != 1:
        raise ValueError("spatial-derivative parameter gradients are 1D only")
    pts, z = _preactivations(net, x)
    act = (z > 0.0).astype(float)
    m = len(pts)
    dW = act * net.c[None, :]
    db = np.zeros((m, net.n_neurons))
    dc = act * net.W[:, 0][None, :]
    return np.concatenate([dW, db, dc], axis=1)


def random_net(n_neurons, input_dim=1, seed=0):
    """Seeded random initialization: W, b uniform on [-1, 1], c on [-0.5, 0.5]."""
    rng = np.random.default_rng(seed)
    return ShallowNet(
        W=rng.uniform(-1.0, 1.0, size=(n_neurons, input_dim)),
        b=rng.uniform(-1.0, 1.0, size=n_neurons),
        c=rng.uniform(-0.5, 0.5, size=n_neurons),
    )


def nn_interpolate_init(target, n_neurons, a=0.0, b=1.0):
    """Network reproducing the piecewise-linear interpolant of a 1D target.

    Uses ``n_neurons`` uniform nodes on [a, b] (so n_neurons - 1
    subintervals) and builds an exact continuous piecewise-linear match at
    the nodes: one constant neuron, one ramp starting at ``a``, and one
    slope-correction kink per interior node.
    """
    n = n_neurons
    if n < 2:
        raise ValueError("interpolation initialization needs at least 2 neurons")
    xs = np.linspace(a, b, n)
    ys = np.asarray([target(x) for x in xs], dtype=float)
    slopes = np.diff(ys) / np.diff(xs)

    W = np.zeros((n, 1))
    bb = np.zeros(n)
    c = np.zeros(n)
    # constant neuron: relu(0*x + 1) = 1
    W[0, 0], bb[0], c[0] = 0.0, 1.0, ys[0]
    # ramp from the left endpoint
    W[1, 0], bb[1], c[1] = 1.0, -a, slopes[0]
    # slope corrections at interior nodes
    for i in range(2, n):
        W[i, 0] = 1.0
        bb[i] = -xs[i - 1]
        c[i] = slopes[i - 1] - slopes[i - 2]
    return ShallowNet(W=W, b=bb, c=c)


def net_to_json(net):
    """Serialize to a JSON string with the flat parameter vector."""
    return json.dumps(
        {
            "n_neurons": net.n_neurons,
            "input_dim": net.input_dim,
            "params": to_vector(net).tolist(),
        }
    )


def net_from_json(text):
    data = json.loads(text)
    return from_vector(
        np.asarray(data["params"], dtype=float), data["n_neurons"], data["input_dim"]
    )

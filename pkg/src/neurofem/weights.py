"""Algebraic weight maps turning a raw control field into weak-form weights.

A weight map sends the (unbounded) network output s to a weight
omega(s) confined to a positive interval, so the weighted forms stay
well-posed no matter what the network does.  The reciprocal map
varpi(s) = 1 / omega(s) appears wherever the inverse weight enters a form.

Available maps:

* ``logistic_offset`` -- omega(s) = 1 + M / (1 + exp(-s)), range (1, 1 + M).
* ``bounded_logistic`` -- omega(s) = 1/2 + 2 / (1 + exp(-s)), range (1/2, 5/2).
* ``constant`` -- omega(s) = value, for unweighted baselines.
"""

from dataclasses import dataclass

import numpy as np


def _sigmoid(s):
    """Numerically stable logistic function."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


@dataclass(frozen=True)
class WeightSpec:
    """Configuration of one weight map."""

    kind: str
    M: float = None
    value: float = None

    def __post_init__(self):
        if self.kind == "logistic_offset":
            if self.M is None or self.M <= 0:
                raise ValueError("logistic_offset needs M > 0")
        elif self.kind == "constant":
            if self.value is None or self.value <= 0:
                raise ValueError("constant weight needs a positive value")
        elif self.kind != "bounded_logistic":
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @property
    def bounds(self):
        """Open interval containing omega(s) for all s."""
        if self.kind == "logistic_offset":
            return (1.0, 1.0 + self.M)
        if self.kind == "bounded_logistic":
            return (0.5, 2.5)
        return (self.value, self.value)


def logistic_offset(M=100.0):
    return WeightSpec(kind="logistic_offset", M=float(M))


def bounded_logistic():
    return WeightSpec(kind="bounded_logistic")


def constant(value=1.0):
    return WeightSpec(kind="constant", value=float(value))


def weight_eval(spec, s):
    """omega(s)."""
    s = np.asarray(s, dtype=float)
    if spec.kind == "logistic_offset":
        out = 1.0 + spec.M * _sigmoid(s)
    elif spec.kind == "bounded_logistic":
        out = 0.5 + 2.0 * _sigmoid(s)
    else:
        out = np.full_like(s, spec.value)
    return out if out.ndim else float(out)


def weight_deriv(spec, s):
    """d omega / d s."""
    s = np.asarray(s, dtype=float)
    sig = _sigmoid(s)
    if spec.kind == "logistic_offset":
        out = spec.M * sig * (1.0 - sig)
    elif spec.kind == "bounded_logistic":
        out = 2.0 * sig * (1.0 - sig)
    else:
        out = np.zeros_like(s)
    return out if out.ndim else float(out)


def weight_deriv2(spec, s):
    """d^2 omega / d s^2."""
    s = np.asarray(s, dtype=float)
    sig = _sigmoid(s)
    base = sig * (1.0 - sig) * (1.0 - 2.0 * sig)
    if spec.kind == "logistic_offset":
        out = spec.M * base
    elif spec.kind == "bounded_logistic":
        out = 2.0 * base
    else:
        out = np.zeros_like(s)
    return out if out.ndim else float(out)


def weight_inv(spec, s):
    """varpi(s) = 1 / omega(s)."""
    out = 1.0 / np.asarray(weight_eval(spec, s))
    return out if out.ndim else float(out)


def weight_inv_deriv(spec, s):
    """d varpi / d s = -omega' / omega^2."""
    w = np.asarray(weight_eval(spec, s))
    out = -np.asarray(weight_deriv(spec, s)) / w**2
    return out if out.ndim else float(out)


def weight_inv_deriv2(spec, s):
    """d^2 varpi / d s^2 = (2 omega'^2 - omega omega'') / omega^3."""
    w = np.asarray(weight_eval(spec, s))
    dw = np.asarray(weight_deriv(spec, s))
    d2w = np.asarray(weight_deriv2(spec, s))
    out = (2.0 * dw**2 - w * d2w) / w**3
    return out if out.ndim else float(out)


def weight_from_config(cfg):
    """Build a WeightSpec from a config mapping like {"kind": ..., "M": ...}."""
    kind = cfg.get("kind", "logistic_offset")
    if kind == "logistic_offset":
        return logistic_offset(cfg.get("M", 100.0))
    if kind == "bounded_logistic":
        return bounded_logistic()
    if kind == "constant":
        return constant(cfg.get("value", 1.0))
    raise ValueError(f"unknown weight kind {kind!r}")

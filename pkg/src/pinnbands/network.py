"""Small fully connected network engine with exact derivative propagation.

The forward pass can carry, next to every activation value, the first and
second derivatives of that activation with respect to up to two tracked
input coordinates ("jets").  The backward pass differentiates any scalar
function of the output jet (its value, first or second derivative entries)
with respect to all weights and biases.  Everything is plain numpy in
double precision; there is no graph framework underneath.

Layer convention: ``layer_sizes = [d_in, h_1, ..., h_k, d_out]``; hidden
layers apply the configured activation, the output layer is linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    ConfigurationError,
    ShapeError,
    TapeMismatchError,
    UnsupportedOrderError,
)
from .jets import Jet2

ACTIVATIONS = ("tanh", "sigmoid")


def _act_with_derivs(name, z):
    """Activation value and its first two derivatives at ``z``."""
    if name == "tanh":
        a = np.tanh(z)
        f1 = 1.0 - a * a
        f2 = -2.0 * a * f1
        return a, f1, f2
    if name == "sigmoid":
        s = expit(z)
        f1 = s * (1.0 - s)
        f2 = f1 * (1.0 - 2.0 * s)
        return s, f1, f2
    raise ConfigurationError(f"unknown activation {name!r}")


def _act_third_deriv(name, a, f1):
    """Third derivative, recovered from the stored value and first derivative."""
    if name == "tanh":
        return f1 * (6.0 * a * a - 2.0)
    one_minus_2s = 1.0 - 2.0 * a
    return f1 * (one_minus_2s * one_minus_2s - 2.0 * f1)


@dataclass
class NetworkParameters:
    """Weights and biases of a fully connected network.

    ``weights[l]`` has shape ``(layer_sizes[l+1], layer_sizes[l])`` and
    ``biases[l]`` shape ``(layer_sizes[l+1],)``.
    """

    layer_sizes: list
    weights: list
    biases: list
    activation: str = "tanh"

    def validate(self):
        sizes = list(self.layer_sizes)
        if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
            raise ConfigurationError(f"invalid layer sizes {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("weight/bias count does not match layer_sizes")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ShapeError(
                    f"layer {l}: weight {w.shape} / bias {b.shape} inconsistent "
                    f"with sizes {sizes[l]}->{sizes[l + 1]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeError(f"layer {l}: non-finite parameter entries")
        return self

    @property
    def input_dim(self) -> int:
        return int(self.layer_sizes[0])

    @property
    def output_dim(self) -> int:
        return int(self.layer_sizes[-1])

    def n_params(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )

    def flat_arrays(self) -> list:
        """Weights followed by biases, the ordering optimizers rely on."""
        return list(self.weights) + list(self.biases)

    def with_flat_arrays(self, arrays) -> "NetworkParameters":
        n = len(self.weights)
        return NetworkParameters(
            list(self.layer_sizes), list(arrays[:n]), list(arrays[n:]), self.activation
        )


@dataclass
class Gradients:
    """Parameter gradients, mirroring NetworkParameters layout."""

    weights: list
    biases: list

    def flat_arrays(self) -> list:
        return list(self.weights) + list(self.biases)

    def allfinite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.flat_arrays())


def init_network(layer_sizes, activation="tanh", seed=0) -> NetworkParameters:
    """Deterministic Glorot-uniform initialization with zero biases.

    Weights for a layer with ``fan_in`` inputs and ``fan_out`` outputs are
    drawn from U(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ConfigurationError(f"layer_sizes needs >= 2 positive entries, got {layer_sizes}")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParameters(sizes, weights, biases, activation).validate()


@dataclass
class JetBatch:
    """Output jets for a batch: value (M,), d1 (M,d), d2 (M,d,d).

    ``d1`` and ``d2`` are None when no coordinates are tracked.
    """

    value: np.ndarray
    d1: np.ndarray = None
    d2: np.ndarray = None


@dataclass
class Tape:
    """Record of one jet-forward pass, consumed by :func:`backward`.

    Each layer entry holds the layer's input jets, the pre-activation
    derivative jets, and the activation value with its first two
    derivatives (None for the linear output layer).
    """

    layer_sizes: tuple
    activation: str
    tracked: tuple
    n_points: int
    layers: list = field(default_factory=list)


def _check_input(params, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ShapeError(
            f"input shape {X.shape} does not match network input dim {params.input_dim}"
        )
    if params.output_dim != 1:
        raise ShapeError("scalar evaluation requires an output layer of width 1")
    return X


def forward_jets_batch(params, X, tracked=(), need_tape=False):
    """Propagate values (and jets for ``tracked`` coordinates) through the net.

    Returns ``(JetBatch, Tape-or-None)``.  The value slot is computed by the
    same sequence of operations regardless of how many coordinates are
    tracked, so values agree bitwise across tracking modes.
    """
    X = _check_input(params, X)
    tracked = tuple(int(i) for i in tracked)
    d = len(tracked)
    if d > 2:
        raise UnsupportedOrderError(f"at most 2 tracked coordinates, got {d}")
    if any(i < 0 or i >= params.input_dim for i in tracked):
        raise ShapeError(f"tracked coordinates {tracked} outside input dim {params.input_dim}")

    M, n0 = X.shape
    v = X
    g = h = None
    if d:
        g = np.zeros((M, d, n0))
        for s, idx in enumerate(tracked):
            g[:, s, idx] = 1.0
        h = np.zeros((M, d, d, n0))

    tape = None
    if need_tape:
        tape = Tape(tuple(params.layer_sizes), params.activation, tracked, M)

    n_layers = len(params.weights)
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        a_in = (v, g, h)
        n_out = W.shape[0]
        v = v @ W.T + b
        if d:
            g = (g.reshape(M * d, -1) @ W.T).reshape(M, d, n_out)
            h = (h.reshape(M * d * d, -1) @ W.T).reshape(M, d, d, n_out)
        z_g, z_h = g, h
        act = None
        if l < n_layers - 1:
            a, f1, f2 = _act_with_derivs(params.activation, v)
            act = (a, f1, f2)
            if d:
                gg = f1[:, None, :] * g
                outer = g[:, :, None, :] * g[:, None, :, :]
                h = f2[:, None, None, :] * outer + f1[:, None, None, :] * h
                g = gg
            v = a
        if need_tape:
            tape.layers.append((a_in, z_g, z_h, act))

    out = JetBatch(
        value=v[:, 0],
        d1=g[:, :, 0] if d else None,
        d2=h[:, :, :, 0] if d else None,
    )
    return out, tape


def backward(params, tape, value_bar, d1_bar=None, d2_bar=None) -> Gradients:
    """Gradient of a scalar loss w.r.t. all weights and biases.

    ``value_bar``/``d1_bar``/``d2_bar`` are the cotangents of the loss with
    respect to the output jet produced by the forward pass that recorded
    ``tape``.  Derivative paths through d1 and d2 are included, which is
    what lets residual losses (built from u, u', u'') train the network.
    """
    if not isinstance(tape, Tape):
        raise TapeMismatchError("backward needs a Tape from forward_jets_batch")
    if tape.layer_sizes != tuple(params.layer_sizes) or tape.activation != params.activation:
        raise TapeMismatchError("tape was recorded with different network parameters")

    d = len(tape.tracked)
    M = tape.n_points
    vb = np.asarray(value_bar, dtype=float).reshape(M, 1)
    if d:
        gb = (
            np.zeros((M, d, 1))
            if d1_bar is None
            else np.asarray(d1_bar, dtype=float).reshape(M, d, 1)
        )
        hb = (
            np.zeros((M, d, d, 1))
            if d2_bar is None
            else np.asarray(d2_bar, dtype=float).reshape(M, d, d, 1)
        )
    else:
        if d1_bar is not None or d2_bar is not None:
            raise TapeMismatchError("derivative cotangents given but tape tracked nothing")
        gb = hb = None

    n_layers = len(params.weights)
    if len(tape.layers) != n_layers:
        raise TapeMismatchError("tape depth does not match parameter count")

    grad_w = [None] * n_layers
    grad_b = [None] * n_layers

    for l in range(n_layers - 1, -1, -1):
        (a_v, a_g, a_h), z_g, z_h, act = tape.layers[l]
        W = params.weights[l]

        if act is not None:
            # reverse through the activation: outputs were
            #   a = f(z), ag = f'(z) g, ah = f''(z) g gT + f'(z) h
            a, f1, f2 = act
            zvb = vb * f1
            if d:
                zvb = zvb + f2 * (gb * z_g).sum(axis=1)
                f3 = _act_third_deriv(params.activation, a, f1)
                outer = z_g[:, :, None, :] * z_g[:, None, :, :]
                zvb = zvb + (
                    hb * (f3[:, None, None, :] * outer + f2[:, None, None, :] * z_h)
                ).sum(axis=(1, 2))
                hb_sym = hb + hb.transpose(0, 2, 1, 3)
                zgb = f1[:, None, :] * gb + f2[:, None, :] * np.einsum(
                    "mstn,mtn->msn", hb_sym, z_g
                )
                zhb = f1[:, None, None, :] * hb
            else:
                zgb = zhb = None
        else:
            zvb, zgb, zhb = vb, gb, hb

        M_ = zvb.shape[0]
        gw = zvb.T @ a_v
        if d:
            n_out, n_in = zvb.shape[1], a_v.shape[1]
            gw = gw + zgb.reshape(M_ * d, n_out).T @ a_g.reshape(M_ * d, n_in)
            gw = gw + zhb.reshape(M_ * d * d, n_out).T @ a_h.reshape(M_ * d * d, n_in)
        grad_w[l] = gw
        grad_b[l] = zvb.sum(axis=0)

        if l > 0:
            vb = zvb @ W
            if d:
                n_in = W.shape[1]
                gb = (zgb.reshape(M_ * d, -1) @ W).reshape(M_, d, n_in)
                hb = (zhb.reshape(M_ * d * d, -1) @ W).reshape(M_, d, d, n_in)

    return Gradients(grad_w, grad_b)


def forward_values(params, X) -> np.ndarray:
    """Batched scalar outputs, no derivative tracking."""
    out, _ = forward_jets_batch(params, X, tracked=())
    return out.value


def forward(params, x) -> float:
    """Scalar network output at a single input point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(forward_values(params, x[None, :])[0])


def forward_jet(params, x, tracked=(0,)) -> Jet2:
    """Network output with exact first/second derivatives w.r.t. ``tracked``.

    The value entry is computed by the same operations as :func:`forward`.
    """
    tracked = tuple(tracked)
    if len(tracked) not in (1, 2):
        raise UnsupportedOrderError(
            f"forward_jet tracks 1 or 2 coordinates, got {len(tracked)}"
        )
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out, _ = forward_jets_batch(params, x[None, :], tracked=tracked)
    return Jet2(out.value[0], out.d1[0], out.d2[0])


def hidden_features(params, X) -> np.ndarray:
    """Post-activation values of the last hidden layer, shape (M, width).

    This is the learned feature basis a Bayesian linear head regresses on.
    """
    X = _check_input(params, X)
    if len(params.weights) < 2:
        raise ConfigurationError("network has no hidden layer to extract features from")
    v = X
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        v = _act_with_derivs(params.activation, v @ W.T + b)[0]
    return v

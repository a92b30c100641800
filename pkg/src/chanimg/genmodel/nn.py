"""Dense networks with hand-written differentiation.

Everything runs in float64 on plain numpy arrays, which keeps training
deterministic for a fixed seed and lets every gradient be checked against
central finite differences.

Besides the usual forward/backward pair, Mlp exposes a forward-mode tangent
pass (jvp) and a reverse pass through it (grad_of_jvp).  Together they
differentiate scalars of the form sum_b coef_b * (v_b . grad_x f(x_b)) with
respect to the parameters, which is exactly what the gradient penalty of a
Wasserstein critic needs: the penalty depends on the input gradient of the
critic, so its parameter gradient requires second derivatives.  Hidden
activations are therefore restricted to smooth choices (tanh, silu) whose
second derivatives exist everywhere.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingDivergedError

__all__ = ["Mlp", "AdamState", "adam_step", "count_params"]


def _sigmoid(a):
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _act(kind, a):
    if kind == "tanh":
        return np.tanh(a)
    if kind == "silu":
        return a * _sigmoid(a)
    return a


def _act_prime(kind, a, h):
    if kind == "tanh":
        return 1.0 - h * h
    if kind == "silu":
        s = _sigmoid(a)
        return s * (1.0 + a * (1.0 - s))
    return 1.0


def _act_second(kind, a, h):
    if kind == "tanh":
        return -2.0 * h * (1.0 - h * h)
    if kind == "silu":
        s = _sigmoid(a)
        return s * (1.0 - s) * (2.0 + a * (1.0 - 2.0 * s))
    return 0.0


ACTIVATIONS = ("tanh", "silu", "linear")


class Mlp:
    """Fully connected network with smooth hidden activations.

    params is a flat list [W0, b0, W1, b1, ...] with W of shape (out, in).
    hidden_act applies to all but the last layer; out_act is 'linear' or
    'tanh'.
    """

    def __init__(self, sizes, out_act="linear", params=None, hidden_act="silu"):
        if out_act not in ("linear", "tanh"):
            raise ValueError("out_act must be 'linear' or 'tanh'")
        if hidden_act not in ("tanh", "silu"):
            raise ValueError("hidden_act must be 'tanh' or 'silu'")
        self.sizes = list(sizes)
        self.out_act = out_act
        self.hidden_act = hidden_act
        self.n_layers = len(sizes) - 1
        self.params = params if params is not None else []

    @property
    def dtype(self):
        return self.params[0].dtype if self.params else np.dtype(np.float64)

    def _kind(self, layer) -> str:
        return self.hidden_act if layer < self.n_layers - 1 else self.out_act

    @classmethod
    def init(cls, sizes, out_act, rng, hidden_act="silu", gains=None, out_bias=None,
             dtype=np.float64) -> "Mlp":
        """Uniform fan-in init: W ~ U(+/- gain/sqrt(fan_in)), zero biases.

        gains: one scale per layer (default sqrt(3), i.e. unit weight
        variance 1/fan_in).  out_bias optionally presets the output bias.
        """
        net = cls(sizes, out_act, hidden_act=hidden_act)
        gains = gains or [np.sqrt(3.0)] * net.n_layers
        for l in range(net.n_layers):
            fan_in, fan_out = sizes[l], sizes[l + 1]
            a = gains[l] / np.sqrt(fan_in)
            net.params.append(rng.uniform(-a, a, size=(fan_out, fan_in)).astype(dtype))
            net.params.append(np.zeros(fan_out, dtype=dtype))
        if out_bias is not None:
            net.params[-1] = np.asarray(out_bias, dtype=dtype).copy()
        return net

    # -- plain passes --------------------------------------------------------

    def forward(self, x):
        """Returns (output (B, sizes[-1]), cache of pre/post activations)."""
        h = [np.asarray(x, dtype=self.dtype)]
        a_list = []
        for l in range(self.n_layers):
            w, b = self.params[2 * l], self.params[2 * l + 1]
            a = h[-1] @ w.T + b
            a_list.append(a)
            h.append(_act(self._kind(l), a))
        return h[-1], {"h": h, "a": a_list}

    def backward(self, cache, d_out, with_param_grads=True):
        """Backprop d_out (B, out) through the cached forward.

        Returns (grads matching self.params or None, d_input).
        """
        h, a = cache["h"], cache["a"]
        grads = [None] * len(self.params) if with_param_grads else None
        d_out = np.asarray(d_out, dtype=self.dtype)
        da = d_out * _act_prime(self._kind(self.n_layers - 1), a[-1], h[-1])
        for l in range(self.n_layers - 1, -1, -1):
            w = self.params[2 * l]
            if with_param_grads:
                grads[2 * l] = da.T @ h[l]
                grads[2 * l + 1] = da.sum(axis=0)
            dh = da @ w
            if l > 0:
                da = dh * _act_prime(self._kind(l - 1), a[l - 1], h[l])
        return grads, dh

    def input_grad(self, cache, d_out):
        """d_input only; skips parameter gradients."""
        _, dx = self.backward(cache, d_out, with_param_grads=False)
        return dx

    # -- tangent machinery for the gradient penalty ---------------------------

    def jvp(self, cache, v):
        """Forward-mode pass: output tangent along input tangent v.

        Parameters carry zero tangent.  Returns (out_tangent, list of
        pre-activation tangents).
        """
        h, a = cache["h"], cache["a"]
        hd = np.asarray(v, dtype=self.dtype)
        a_dots = []
        for l in range(self.n_layers):
            w = self.params[2 * l]
            ad = hd @ w.T
            a_dots.append(ad)
            hd = _act_prime(self._kind(l), a[l], h[l + 1]) * ad
        return hd, a_dots

    def grad_of_jvp(self, cache, v, r_out):
        """Parameter gradient of sum_b r_out_b . out_tangent_b.

        cache is the primal forward cache and v the input tangent.  Only
        linear-output networks are supported (the critic).  Returns
        (grads, d_input_primal); the latter continues into whatever
        produced the primal input (e.g. the condition embedding).
        """
        if self.out_act != "linear":
            raise ValueError("grad_of_jvp supports linear-output networks only")
        h, a = cache["h"], cache["a"]
        _, a_dots = self.jvp(cache, v)
        h_dots = [np.asarray(v, dtype=self.dtype)]
        for l in range(self.n_layers - 1):
            h_dots.append(_act_prime(self._kind(l), a[l], h[l + 1]) * a_dots[l])

        grads = [None] * len(self.params)
        r_ad = np.asarray(r_out, dtype=self.dtype)  # d/d(a_dot), last layer
        r_a = np.zeros_like(r_ad)
        for l in range(self.n_layers - 1, -1, -1):
            w = self.params[2 * l]
            grads[2 * l] = r_a.T @ h[l] + r_ad.T @ h_dots[l]
            grads[2 * l + 1] = r_a.sum(axis=0)
            r_h = r_a @ w
            r_hd = r_ad @ w
            if l > 0:
                kind = self._kind(l - 1)
                s1 = _act_prime(kind, a[l - 1], h[l])
                s2 = _act_second(kind, a[l - 1], h[l])
                r_ad = s1 * r_hd
                r_a = s2 * a_dots[l - 1] * r_hd + s1 * r_h
        return grads, r_h

    # -- bookkeeping ----------------------------------------------------------

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.out_act, [p.copy() for p in self.params],
                   hidden_act=self.hidden_act)


def count_params(*nets) -> int:
    return sum(p.size for net in nets for p in net.params)


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    step: int
    m: list
    v: list

    @classmethod
    def zeros(cls, params) -> "AdamState":
        return cls(0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, lr: float, beta1: float, beta2: float,
              eps: float = 1e-8):
    """In-place Adam update with bias correction; returns params.

    Raises TrainingDivergedError on any non-finite gradient.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(t, "non-finite gradient")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params

"""Plain-numpy MLP with manual reverse-mode gradients and Adam.

Weights follow the x @ W + b convention, ReLU hidden activations, and an
optional tanh on the output. backward returns both parameter gradients
and the gradient with respect to the input, which the actor update needs
to differentiate through a critic.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class Mlp:
    """Fully connected net: widths like [in, h1, ..., out]."""

    def __init__(self, widths, out_transform: str = "identity",
                 rng: np.random.Generator | None = None):
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if out_transform not in ("identity", "tanh"):
            raise ValueError(f"unknown output transform {out_transform!r}")
        self.widths = list(int(w) for w in widths)
        self.out_transform = out_transform
        rng = rng or np.random.default_rng()
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_parameters(self, params) -> None:
        flat = list(params)
        if len(flat) != 2 * self.n_layers:
            raise ShapeMismatch("parameter count mismatch")
        for i in range(self.n_layers):
            self.weights[i] = np.asarray(flat[2 * i], dtype=float)
            self.biases[i] = np.asarray(flat[2 * i + 1], dtype=float)

    def copy(self) -> "Mlp":
        twin = Mlp.__new__(Mlp)
        twin.widths = list(self.widths)
        twin.out_transform = self.out_transform
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin

    def forward(self, x, want_cache: bool = False):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.widths[0]:
            raise ShapeMismatch(
                f"input width {x.shape[1]}, expected {self.widths[0]}")
        pre = []    # pre-activation per layer
        post = [x]  # layer inputs (post-activation of previous)
        h = x
        for i in range(self.n_layers):
            z = h @ self.weights[i] + self.biases[i]
            pre.append(z)
            h = np.maximum(z, 0.0) if i < self.n_layers - 1 else z
            if i < self.n_layers - 1:
                post.append(h)
        if self.out_transform == "tanh":
            h = np.tanh(h)
        out = h[0] if squeeze else h
        if want_cache:
            return out, (pre, post, squeeze)
        return out

    def backward(self, cache, grad_out):
        """Gradients of sum(out * grad_out) wrt parameters and input."""
        pre, post, squeeze = cache
        g = np.asarray(grad_out, dtype=float)
        if squeeze:
            g = g[None, :]
        if g.shape != pre[-1].shape:
            raise ShapeMismatch("upstream gradient shape mismatch")
        if self.out_transform == "tanh":
            g = g * (1.0 - np.tanh(pre[-1]) ** 2)
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            grads_w[i] = post[i].T @ g
            grads_b[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (pre[i - 1] > 0.0)
        grad_in = g[0] if squeeze else g
        flat = []
        for gw, gb in zip(grads_w, grads_b):
            flat.append(gw)
            flat.append(gb)
        return flat, grad_in


class Adam:
    """Adam over a list of parameter arrays (matched to Mlp.parameters())."""

    def __init__(self, params, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

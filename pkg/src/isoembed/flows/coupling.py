"""Coupling networks: small rectifier MLPs used inside flow layers.

The output layer starts at zero so every freshly built flow is the
identity map; hidden layers use seeded He-style initialization.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..rng import PinnedRng


class CouplingNet:
    """MLP in_size -> hidden ... hidden -> out_size with rectifier hiddens."""

    def __init__(self, weights: list[ad.Tensor], biases: list[ad.Tensor]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("weights and biases must pair up")
        for w, b in zip(weights, biases):
            if w.data.shape[1] != b.data.shape[0]:
                raise ValueError("inconsistent layer widths")
        for w_prev, w_next in zip(weights, weights[1:]):
            if w_prev.data.shape[1] != w_next.data.shape[0]:
                raise ValueError("inconsistent width chain")
        self.weights = weights
        self.biases = biases

    @classmethod
    def build(cls, in_size: int, out_size: int, hidden: tuple[int, ...], rng: PinnedRng):
        widths = [in_size, *hidden, out_size]
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            last = i == len(widths) - 2
            if last:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.gaussians(fan_in * fan_out).reshape(fan_in, fan_out)
                w *= np.sqrt(2.0 / fan_in)
            weights.append(ad.parameter(w))
            biases.append(ad.parameter(np.zeros(fan_out)))
        return cls(weights, biases)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(w.data.shape[0] for w in self.weights) + (
            self.weights[-1].data.shape[1],
        )

    def parameters(self) -> list[ad.Tensor]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def tensor_apply(self, x: ad.Tensor) -> ad.Tensor:
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add(ad.matmul(h, w), b)
            if i != last:
                h = ad.relu(h)
        return h

    def numpy_apply(self, x: np.ndarray) -> np.ndarray:
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if i != last:
                h = np.maximum(h, 0.0)
        return h


def parity_indices(dim: int, parity: int) -> tuple[np.ndarray, np.ndarray]:
    """(conditioning, transformed) column indices for an alternating mask.

    Parity 0 conditions on even columns and transforms odd ones; parity 1
    swaps the roles.
    """
    even = np.arange(0, dim, 2)
    odd = np.arange(1, dim, 2)
    return (even, odd) if parity == 0 else (odd, even)

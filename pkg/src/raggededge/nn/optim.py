"""Adam with decoupled weight decay.

The decay is applied directly to the decayed tensors each step (a plain
multiplicative shrink), independent of the learning rate, so the gradient
path reduces to standard Adam when the decay is zero.
"""

from __future__ import annotations

import numpy as np

from .network import WEIGHT_KEYS


class AdamW:
    def __init__(
        self,
        learning_rate: float = 1e-3,
        weight_decay: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        decay_keys: frozenset[str] = frozenset(WEIGHT_KEYS),
    ):
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.decay_keys = decay_keys
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update tensors in place from one batch of gradients."""
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, grad in grads.items():
            if key not in self._m:
                self._m[key] = np.zeros_like(grad)
                self._v[key] = np.zeros_like(grad)
            m = self._m[key]
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad**2
            mhat = m / bc1
            vhat = v / bc2
            tensors[key] -= self.learning_rate * mhat / (np.sqrt(vhat) + self.eps)
            if self.weight_decay != 0.0 and key in self.decay_keys:
                tensors[key] -= self.weight_decay * tensors[key]

"""Small dense ReLU network with hand-written backpropagation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ToyNet:
    weights: list
    biases: list

    @classmethod
    def init(cls, sizes, rng: np.random.Generator) -> "ToyNet":
        """He-normal weights, zero biases. ``sizes`` = [in, hidden..., out]."""
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "ToyNet":
        return ToyNet([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def forward(self, x: np.ndarray, keep: bool = False):
        """Logits for a batch ``x`` (n, in); with ``keep`` also the layer inputs."""
        a = np.asarray(x, dtype=float)
        acts = [a]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            a = z if i == last else np.maximum(z, 0.0)
            acts.append(a)
        return (a, acts) if keep else a

    __call__ = forward

    def backward(self, acts: list, dlogits: np.ndarray) -> list[np.ndarray]:
        """Gradients matching ``params()`` order, given dLoss/dlogits."""
        grads = []
        delta = dlogits
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            grads.append(delta.sum(axis=0))
            grads.append(a_in.T @ delta)
            if i > 0:
                # relu'(z) is 1 exactly where the stored activation is positive
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        grads.reverse()
        return grads

    def equals(self, other: "ToyNet") -> bool:
        return len(self.weights) == len(other.weights) and all(
            np.array_equal(p, q) for p, q in zip(self.params(), other.params())
        )

    def to_dict(self) -> dict:
        return {"weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases]}

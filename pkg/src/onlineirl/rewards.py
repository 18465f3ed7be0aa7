"""Parameterized reward models: linear-in-features and a small tanh MLP.

A model is an architecture descriptor; the parameter vector ``theta`` is
passed explicitly so a learner can keep many candidate vectors alive at
once.  ``theta`` is flat with a fixed layout (layer by layer, weights
row-major then biases), which keeps the optimization loop model-agnostic.

Both models expose the per-state reward r(s; theta) and its Jacobian
d r(s) / d theta.  The MLP Jacobian is a manual backward pass vectorized
over states; there is no autodiff dependency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

KINDS = ("linear", "mlp")


@dataclass(frozen=True)
class RewardModel:
    """Reward architecture: ``kind`` is 'linear' or 'mlp'.

    ``hidden`` lists the hidden-layer widths for the MLP and must be empty
    for the linear model.  MLP hidden activations are tanh; the output unit
    is linear.
    """

    kind: str
    n_features: int
    hidden: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown reward model kind {self.kind!r}")
        if self.n_features < 1:
            raise ValidationError("n_features must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.kind == "linear" and self.hidden:
            raise ValidationError("linear model takes no hidden layers")
        if self.kind == "mlp" and (not self.hidden or any(h < 1 for h in self.hidden)):
            raise ValidationError("mlp needs at least one positive hidden width")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.n_features, *self.hidden, 1)

    @property
    def n_params(self) -> int:
        if self.kind == "linear":
            return self.n_features
        sizes = self.layer_sizes
        return sum((sizes[i] + 1) * sizes[i + 1] for i in range(len(sizes) - 1))

    def init_params(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Fresh parameter vector.

        Linear: uniform in [-scale, scale].  MLP: weights uniform in the
        usual +-sqrt(6 / (fan_in + fan_out)) range (times ``scale``), biases
        zero.
        """
        if self.kind == "linear":
            return rng.uniform(-scale, scale, size=self.n_features)
        theta = np.zeros(self.n_params)
        offset = 0
        sizes = self.layer_sizes
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = scale * np.sqrt(6.0 / (fan_in + fan_out))
            n_w = fan_in * fan_out
            theta[offset : offset + n_w] = rng.uniform(-bound, bound, size=n_w)
            offset += n_w + fan_out  # biases stay zero
        return theta

    def reward(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Per-state reward table r = f(phi; theta), shape (n_states,)."""
        theta, phi = self._check(theta, phi)
        if self.kind == "linear":
            return phi @ theta
        h = phi
        for w, b, last in self._layers(theta):
            z = h @ w + b
            h = z if last else np.tanh(z)
        return h[:, 0]

    def jacobian(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """d r(s) / d theta for every state, shape (n_states, n_params)."""
        theta, phi = self._check(theta, phi)
        if self.kind == "linear":
            return phi.copy()

        # Forward pass, keeping every activation for the backward sweep.
        activations = [phi]
        h = phi
        layers = list(self._layers(theta))
        for w, b, last in layers:
            z = h @ w + b
            h = z if last else np.tanh(z)
            activations.append(h)

        n_states = phi.shape[0]
        jac = np.empty((n_states, self.n_params))
        # delta[s, j] = d output(s) / d pre-activation_j of the current layer
        delta = np.ones((n_states, 1))
        offset = self.n_params
        for (w, b, last), h_in, h_out in zip(
            reversed(layers), reversed(activations[:-1]), reversed(activations[1:])
        ):
            if not last:
                delta = delta * (1.0 - h_out * h_out)
            n_w = w.size
            offset -= n_w + b.size
            jac[:, offset + n_w : offset + n_w + b.size] = delta
            jac[:, offset : offset + n_w] = np.einsum("si,sj->sij", h_in, delta).reshape(
                n_states, n_w
            )
            delta = delta @ w.T
        return jac

    def vjp(self, theta: np.ndarray, phi: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Vector-Jacobian product: d(sum_s weights[s] * r(s)) / d theta.

        Equivalent to ``jacobian(theta, phi).T @ weights`` but computed with
        one weighted backward pass, so the per-state Jacobian never
        materializes.  This is what a gradient step against a fixed state
        weighting needs.
        """
        theta, phi = self._check(theta, phi)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (phi.shape[0],):
            raise ValidationError(f"weights shape {weights.shape} != ({phi.shape[0]},)")
        if self.kind == "linear":
            return phi.T @ weights

        activations = [phi]
        h = phi
        layers = list(self._layers(theta))
        for w, b, last in layers:
            z = h @ w + b
            h = z if last else np.tanh(z)
            activations.append(h)

        out = np.empty(self.n_params)
        delta = weights[:, None]
        offset = self.n_params
        for (w, b, last), h_in, h_out in zip(
            reversed(layers), reversed(activations[:-1]), reversed(activations[1:])
        ):
            if not last:
                delta = delta * (1.0 - h_out * h_out)
            n_w = w.size
            offset -= n_w + b.size
            out[offset + n_w : offset + n_w + b.size] = delta.sum(axis=0)
            out[offset : offset + n_w] = (h_in.T @ delta).reshape(n_w)
            delta = delta @ w.T
        return out

    def _layers(self, theta: np.ndarray):
        """Yield (weight matrix, bias vector, is_output) per layer."""
        sizes = self.layer_sizes
        offset = 0
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            n_w = fan_in * fan_out
            w = theta[offset : offset + n_w].reshape(fan_in, fan_out)
            b = theta[offset + n_w : offset + n_w + fan_out]
            offset += n_w + fan_out
            yield w, b, i == len(sizes) - 2

    def _check(self, theta, phi) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=np.float64)
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != self.n_features:
            raise ValidationError(
                f"feature matrix shape {phi.shape} does not end in n_features={self.n_features}"
            )
        if theta.shape != (self.n_params,):
            raise ValidationError(f"theta shape {theta.shape} != ({self.n_params},)")
        return theta, phi

    def theta_to_json(self, theta: np.ndarray) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "hidden": list(self.hidden),
            "theta": np.asarray(theta, dtype=np.float64).tolist(),
        }


def model_from_json(doc: dict) -> tuple[RewardModel, np.ndarray]:
    """Rebuild a (model, theta) pair saved by :meth:`RewardModel.theta_to_json`."""
    model = RewardModel(
        kind=doc["kind"],
        n_features=int(doc["n_features"]),
        hidden=tuple(doc.get("hidden", ())),
    )
    theta = np.asarray(doc["theta"], dtype=np.float64)
    if theta.shape != (model.n_params,):
        raise ValidationError(
            f"theta snapshot has {theta.shape[0]} entries, architecture needs {model.n_params}"
        )
    return model, theta

"""Trainable parameter storage, the Adam optimizer, and a gradient oracle."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import ConfigError, NondeterministicLossError, ShapeMismatchError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ParamStore:
    """Named trainable tensors with per-parameter Adam moments.

    Every parameter owns exactly one (m, v) moment pair of its own shape;
    the step counter only ever increases.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, values) -> Tensor:
        if name in self._params:
            raise ConfigError(f"parameter {name!r} already registered")
        t = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def num_values(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def zero_grad(self):
        for t in self._params.values():
            t.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Current gradients, with zeros for parameters that received none."""
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in self._params.items()
        }

    def adam_step(
        self,
        grads: dict[str, np.ndarray] | None = None,
        lr: float = 0.001,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPS,
    ):
        """One bias-corrected Adam update; ``grads`` defaults to stored .grad."""
        if grads is None:
            grads = self.gradients()
        self.step_count += 1
        t = self.step_count
        for name, param in self._params.items():
            g = np.asarray(grads.get(name, 0.0), dtype=np.float64)
            if g.ndim == 0:
                g = np.broadcast_to(g, param.data.shape)
            if g.shape != param.data.shape:
                raise ShapeMismatchError(
                    f"gradient for {name!r} has shape {g.shape}, expected {param.data.shape}"
                )
            m = self._m[name] = beta1 * self._m[name] + (1.0 - beta1) * g
            v = self._v[name] = beta2 * self._v[name] + (1.0 - beta2) * (g * g)
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            param.data -= lr * m_hat / (np.sqrt(v_hat) + eps)

    def copy(self) -> "ParamStore":
        other = ParamStore()
        for name, t in self._params.items():
            other.add(name, t.data.copy())
            other._m[name] = self._m[name].copy()
            other._v[name] = self._v[name].copy()
        other.step_count = self.step_count
        return other

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "ParamStore":
        store = cls()
        for name, values in arrays.items():
            store.add(name, values)
        return store


def finite_diff_check(
    loss_fn,
    params: ParamStore,
    epsilon: float = 1e-5,
    max_coords_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` maps a ParamStore to a scalar Tensor and must be
    deterministic (checked by evaluating twice).  Returns the maximum over
    sampled parameter coordinates of

        |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ConfigError(f"epsilon {epsilon} outside [1e-7, 1e-3]")

    first = float(loss_fn(params).item())
    second = float(loss_fn(params).item())
    if first != second:
        raise NondeterministicLossError(
            f"loss_fn returned {first!r} then {second!r} for identical parameters"
        )

    params.zero_grad()
    out = loss_fn(params)
    out.backward()
    analytic = {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in params.items()}

    worst = 0.0
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        grad_flat = analytic[name].reshape(-1)
        for i in coords:
            original = flat[i]
            flat[i] = original + epsilon
            f_plus = float(loss_fn(params).item())
            flat[i] = original - epsilon
            f_minus = float(loss_fn(params).item())
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            a = grad_flat[i]
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if rel > worst:
                worst = rel
    return worst

"""First-order update rules: SGD, Adagrad, RMSprop, Adam.

All four share one interface: ``step(params, grads)`` updates the parameter
arrays in place and advances the optimizer's internal state. Accumulators
are created lazily with the shapes of the first ``step`` call and are part
of training checkpoints, so a resumed run continues bit-identically.
Epsilon sits outside the square root: ``lr * g / (sqrt(v) + eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TrainingAbort

KINDS = ("sgd", "adam", "adagrad", "rmsprop")

DEFAULT_LR = {"sgd": 0.01, "adagrad": 0.01, "adam": 0.001, "rmsprop": 0.001}


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    lr: float | None = None  # None picks the kind's default
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.9
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}, expected one of {KINDS}")
        if self.lr is not None and self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        for name in ("beta1", "beta2", "rho"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")

    @property
    def effective_lr(self) -> float:
        return DEFAULT_LR[self.kind] if self.lr is None else self.lr


class Optimizer:
    """Base class holding the step counter and lazily-shaped accumulators."""

    slot_names: tuple[str, ...] = ()

    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg
        self.lr = cfg.effective_lr
        self.t = 0
        self.slots: dict[str, list[np.ndarray]] = {}

    def _ensure_slots(self, params: list[np.ndarray]) -> None:
        for name in self.slot_names:
            if name not in self.slots:
                self.slots[name] = [np.zeros_like(p) for p in params]

    def _check(self, params, grads) -> None:
        if len(params) != len(grads):
            raise ConfigError("params and grads must have the same length")
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ConfigError(f"gradient {i} shape {g.shape} != parameter shape {p.shape}")
            if not np.all(np.isfinite(g)):
                bad = int(np.count_nonzero(~np.isfinite(g)))
                raise TrainingAbort(
                    f"non-finite gradient for parameter {i} ({bad} bad entries) at step {self.t}"
                )

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self._check(params, grads)
        self._ensure_slots(params)
        self.t += 1
        self._update(params, grads)

    def _update(self, params, grads) -> None:
        raise NotImplementedError

    def reset(self) -> None:
        """Back to a fresh state: t = 0, all accumulators zero. Idempotent."""
        self.t = 0
        for arrs in self.slots.values():
            for a in arrs:
                a[...] = 0.0

    def state_dict(self) -> dict:
        return {
            "kind": self.cfg.kind,
            "t": self.t,
            "slots": {name: [a.copy() for a in arrs] for name, arrs in self.slots.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        if state["kind"] != self.cfg.kind:
            raise ConfigError(
                f"checkpoint optimizer kind {state['kind']!r} != configured {self.cfg.kind!r}"
            )
        self.t = int(state["t"])
        self.slots = {
            name: [np.array(a, dtype=np.float64) for a in arrs]
            for name, arrs in state["slots"].items()
        }


class SGD(Optimizer):
    def _update(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adagrad(Optimizer):
    slot_names = ("sq_sum",)

    def _update(self, params, grads):
        for p, g, G in zip(params, grads, self.slots["sq_sum"]):
            G += g * g
            p -= self.lr * g / (np.sqrt(G) + self.cfg.eps)


class RMSprop(Optimizer):
    slot_names = ("sq_avg",)

    def _update(self, params, grads):
        rho = self.cfg.rho
        for p, g, v in zip(params, grads, self.slots["sq_avg"]):
            v *= rho
            v += (1.0 - rho) * g * g
            p -= self.lr * g / (np.sqrt(v) + self.cfg.eps)


class Adam(Optimizer):
    slot_names = ("m", "v")

    def _update(self, params, grads):
        b1, b2 = self.cfg.beta1, self.cfg.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.slots["m"], self.slots["v"]):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.cfg.eps)


_CLASSES = {"sgd": SGD, "adagrad": Adagrad, "rmsprop": RMSprop, "adam": Adam}


def make_optimizer(cfg: OptimizerConfig) -> Optimizer:
    return _CLASSES[cfg.kind](cfg)

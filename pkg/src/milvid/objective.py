"""Bag-max hinge objective with L2 regularization and argmax routing.

Each bag contributes ``max(0, 1 - Y * s)`` where ``s`` is the highest
instance score in the bag and ``Y`` its +1/-1 label; the objective is the
mean over bags plus ``lam * 0.5 * ||W||^2`` over weight matrices (biases
excluded). The subgradient of the max term flows only through the instance
that attains the bag maximum; bags whose hinge is zero contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bag_model import Bag
from .errors import ConfigError, ValidationError
from .scorer import Gradients, ScoringModel, backward, forward_batch


@dataclass(frozen=True)
class BagLoss:
    bag_id: str
    bag_score: float
    argmax_index: int
    margin: float  # Y * bag_score
    hinge: float  # max(0, 1 - margin)


def bag_score(
    model: ScoringModel,
    bag: Bag,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, int]:
    """Highest instance score in the bag and the index attaining it.

    Ties break toward the lowest temporal index.
    """
    scores, _ = forward_batch(model, bag.feature_matrix(), train=train, rng=rng)
    idx = int(np.argmax(scores))  # argmax returns the first maximum
    return float(scores[idx]), idx


def _bag_loss(model, bag, train, rng):
    scores, trace = forward_batch(model, bag.feature_matrix(), train=train, rng=rng)
    idx = int(np.argmax(scores))
    s = float(scores[idx])
    margin = bag.label * s
    hinge = max(0.0, 1.0 - margin)
    return BagLoss(bag.bag_id, s, idx, margin, hinge), trace


def objective(
    model: ScoringModel,
    bags: list[Bag],
    lam: float,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[BagLoss]]:
    """Mean bag hinge plus ``lam * 0.5 * ||W||^2``; also per-bag detail."""
    _check_args(bags, lam)
    losses = [_bag_loss(model, bag, train, rng)[0] for bag in bags]
    value = sum(l.hinge for l in losses) / len(bags) + lam * 0.5 * model.weight_sq_norm()
    return value, losses


def objective_gradient(
    model: ScoringModel,
    bags: list[Bag],
    lam: float,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[BagLoss], Gradients]:
    """Objective value, per-bag detail, and its exact (sub)gradient.

    For every bag with a violated margin, ``-Y / z`` is backpropagated
    through the argmax instance's forward trace; the L2 term adds
    ``lam * W`` to each weight gradient. Bags are processed in their given
    order so accumulation is deterministic.
    """
    _check_args(bags, lam)
    z = len(bags)
    losses: list[BagLoss] = []
    grads = Gradients.zeros_like(model)
    total_hinge = 0.0
    for bag in bags:
        loss, trace = _bag_loss(model, bag, train, rng)
        losses.append(loss)
        total_hinge += loss.hinge
        if loss.hinge > 0.0:
            grads.add(backward(model, trace.select(loss.argmax_index), -bag.label / z))
    for gw, w in zip(grads.weights, model.weights):
        gw += lam * w
    value = total_hinge / z + lam * 0.5 * model.weight_sq_norm()
    return value, losses, grads


def _check_args(bags, lam) -> None:
    if lam < 0:
        raise ConfigError(f"regularization strength must be >= 0, got {lam}")
    if not bags:
        raise ValidationError("objective needs at least one bag")

"""Alignment losses over supplied sequence-level log-probabilities.

No model forward passes happen here: callers provide, per example, the policy
and reference log-probabilities of a whole sequence plus a desirability flag.
With ``r = policy_logprob - ref_logprob`` and a reference shift ``z0``:

* desirable:   ``v = lambda_d * sigmoid(beta * (r - z0))``
* undesirable: ``v = lambda_u * sigmoid(beta * (z0 - r))``

and the batch loss is the mean of ``lambda_y - v`` with ``lambda_y`` the
example's own weight. ``z0`` estimates the policy/reference divergence as the
clamped batch mean of ``r`` (matching the unpaired construction where each
example's shift is estimated from the rest of the batch); it is treated as a
constant — no gradient flows through it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class KtoExample:
    """One judged sequence: summed token log-probs under both models."""

    policy_logprob: float
    ref_logprob: float
    desirable: bool

    def __post_init__(self) -> None:
        for name in ("policy_logprob", "ref_logprob"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a number")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            if value > 0.0:
                raise ValueError(f"{name} is a log-probability and must be <= 0, got {value}")


@dataclass(frozen=True)
class KtoConfig:
    beta: float = 0.1
    lambda_d: float = 1.0
    lambda_u: float = 1.0

    def __post_init__(self) -> None:
        for name in ("beta", "lambda_d", "lambda_u"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {"beta": self.beta, "lambda_d": self.lambda_d, "lambda_u": self.lambda_u}


def sigmoid(x: float) -> float:
    """Numerically stable logistic function."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def implied_reward(example: KtoExample) -> float:
    """Log-ratio reward ``log pi(y|x) - log pi_ref(y|x)``."""
    return example.policy_logprob - example.ref_logprob


def estimate_z0(batch: Sequence[KtoExample]) -> float:
    """Reference shift: batch mean of implied rewards, clamped at zero."""
    if len(batch) < 2:
        raise ValueError(f"z0 estimation needs at least 2 examples, got {len(batch)}")
    mean = sum(implied_reward(e) for e in batch) / len(batch)
    return max(0.0, mean)


def kto_value(example: KtoExample, z0: float, cfg: KtoConfig = KtoConfig()) -> float:
    r = implied_reward(example)
    if example.desirable:
        return cfg.lambda_d * sigmoid(cfg.beta * (r - z0))
    return cfg.lambda_u * sigmoid(cfg.beta * (z0 - r))


def kto_loss(batch: Sequence[KtoExample], z0: float, cfg: KtoConfig = KtoConfig()) -> float:
    """Mean over the batch of ``lambda_y - v(x, y)``."""
    if not batch:
        raise ValueError("kto loss of an empty batch is undefined")
    total = 0.0
    for example in batch:
        weight = cfg.lambda_d if example.desirable else cfg.lambda_u
        total += weight - kto_value(example, z0, cfg)
    return total / len(batch)


def kto_grad(batch: Sequence[KtoExample], z0: float, cfg: KtoConfig = KtoConfig()) -> list[float]:
    """Analytic ``d loss / d policy_logprob`` per example (``z0`` held fixed).

    For desirable examples the loss term is ``lambda_d * (1 - sigmoid(beta *
    (r - z0)))`` so the derivative is ``-lambda_d * beta * s * (1 - s) / N``;
    undesirable examples flip the sign.
    """
    if not batch:
        raise ValueError("kto gradient of an empty batch is undefined")
    n = len(batch)
    grads: list[float] = []
    for example in batch:
        r = implied_reward(example)
        if example.desirable:
            s = sigmoid(cfg.beta * (r - z0))
            grads.append(-cfg.lambda_d * cfg.beta * s * (1.0 - s) / n)
        else:
            s = sigmoid(cfg.beta * (z0 - r))
            grads.append(cfg.lambda_u * cfg.beta * s * (1.0 - s) / n)
    return grads


def sft_loss(batch: Sequence[Sequence[float]]) -> float:
    """Mean over sequences of the mean per-token negative log-likelihood.

    ``batch`` holds per-sequence lists of token probabilities in ``(0, 1]``.
    A batch of all-ones sequences scores exactly 0.
    """
    if not batch:
        raise ValueError("sft loss of an empty batch is undefined")
    per_sequence: list[float] = []
    for i, probs in enumerate(batch):
        if not len(probs):
            raise ValueError(f"sequence {i} has no tokens")
        total = 0.0
        for j, p in enumerate(probs):
            if not 0.0 < p <= 1.0:
                raise ValueError(f"sequence {i} token {j}: probability {p} outside (0, 1]")
            total += -math.log(p)
        per_sequence.append(total / len(probs))
    return sum(per_sequence) / len(per_sequence)


# ---------------------------------------------------------------------------
# batch I/O


def load_kto_batch(path) -> list[KtoExample]:
    """Read a JSONL file of ``{"policy_logprob", "ref_logprob", "desirable"}`` rows."""
    examples: list[KtoExample] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                examples.append(
                    KtoExample(
                        policy_logprob=float(row["policy_logprob"]),
                        ref_logprob=float(row["ref_logprob"]),
                        desirable=bool(row["desirable"]),
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
                raise ValueError(f"{path}: line {line_no}: {err}") from err
    return examples


def kto_report(batch: Sequence[KtoExample], cfg: KtoConfig = KtoConfig()) -> dict:
    """Loss, shift, and per-example gradients as a JSON-ready mapping."""
    z0 = estimate_z0(batch)
    return {
        "n_examples": len(batch),
        "z0": z0,
        "loss": kto_loss(batch, z0, cfg),
        "grads": kto_grad(batch, z0, cfg),
    }

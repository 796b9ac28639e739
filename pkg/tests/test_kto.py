"""Value function shape, analytic gradients vs finite differences, SFT loss."""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from secad.kto import (
    KtoConfig,
    KtoExample,
    estimate_z0,
    implied_reward,
    kto_grad,
    kto_loss,
    kto_report,
    kto_value,
    load_kto_batch,
    sft_loss,
    sigmoid,
)


def ex(policy: float, ref: float, desirable: bool) -> KtoExample:
    return KtoExample(policy_logprob=policy, ref_logprob=ref, desirable=desirable)


def random_batch(rng: np.random.Generator, n: int) -> list[KtoExample]:
    out = []
    for _ in range(n):
        policy = float(-rng.uniform(0.01, 30.0))
        ref = float(-rng.uniform(0.01, 30.0))
        out.append(ex(policy, ref, bool(rng.integers(0, 2))))
    return out


# ---------------------------------------------------------------------------
# pieces


def test_sigmoid_basics():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(50.0) == pytest.approx(1.0)
    assert sigmoid(-50.0) == pytest.approx(0.0, abs=1e-20)
    assert sigmoid(-800.0) == 0.0  # no overflow
    assert sigmoid(2.0) + sigmoid(-2.0) == pytest.approx(1.0, abs=1e-15)


def test_implied_reward():
    assert implied_reward(ex(-1.0, -3.0, True)) == 2.0
    assert implied_reward(ex(-5.0, -2.0, False)) == -3.0


def test_value_at_reference_point():
    # when r == z0 the desirable value is exactly half its weight
    cfg = KtoConfig(lambda_d=1.7)
    z0 = 2.0
    e = ex(-1.0, -3.0, True)  # r = 2 = z0
    assert kto_value(e, z0, cfg) == pytest.approx(0.5 * 1.7, abs=1e-15)


def test_label_antisymmetry():
    # flipping the label reflects the value around half the weight:
    # v_D(r) + v_U(r) == lambda when lambda_d == lambda_u
    cfg = KtoConfig(beta=0.3, lambda_d=1.0, lambda_u=1.0)
    for r in (-5.0, -0.5, 0.0, 1.0, 4.0):
        e_d = ex(-1.0, -1.0 - r, True) if r >= 0 else ex(-1.0 + r, -1.0, True)
        e_u = ex(e_d.policy_logprob, e_d.ref_logprob, False)
        z0 = 0.7
        total = kto_value(e_d, z0, cfg) + kto_value(e_u, z0, cfg)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_z0_estimator():
    batch = [ex(-1.0, -2.0, True), ex(-4.0, -1.0, False)]  # rewards 1, -3
    assert estimate_z0(batch) == 0.0  # mean -1 clamped
    batch = [ex(-1.0, -4.0, True), ex(-2.0, -3.0, False)]  # rewards 3, 1
    assert estimate_z0(batch) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        estimate_z0([ex(-1.0, -1.0, True)])


def test_monotonicity_in_reward():
    cfg = KtoConfig()
    z0 = 0.0
    rewards = [-4.0, -1.0, 0.0, 2.0, 5.0]
    desirable_vals = [kto_value(ex(-1.0 + min(r, 0.0), -1.0 - max(r, 0.0), True), z0, cfg) for r in rewards]
    undesirable_vals = [kto_value(ex(-1.0 + min(r, 0.0), -1.0 - max(r, 0.0), False), z0, cfg) for r in rewards]
    assert desirable_vals == sorted(desirable_vals)
    assert undesirable_vals == sorted(undesirable_vals, reverse=True)


# ---------------------------------------------------------------------------
# loss and gradient


def test_loss_bounds_and_mean():
    cfg = KtoConfig(lambda_d=1.0, lambda_u=1.0)
    batch = [ex(-1.0, -1.0, True), ex(-2.0, -2.0, False)]
    z0 = 0.0
    # both rewards are 0 == z0, so each value is 0.5 and each term 0.5
    assert kto_loss(batch, z0, cfg) == pytest.approx(0.5, abs=1e-15)
    rng = np.random.default_rng(8)
    for _ in range(20):
        batch = random_batch(rng, int(rng.integers(2, 9)))
        z0 = estimate_z0(batch)
        loss = kto_loss(batch, z0, cfg)
        assert 0.0 < loss < 1.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        batch = random_batch(rng, n)
        cfg = KtoConfig(
            beta=float(rng.uniform(0.01, 10.0)),
            lambda_d=float(rng.uniform(0.1, 10.0)),
            lambda_u=float(rng.uniform(0.1, 10.0)),
        )
        z0 = estimate_z0(batch)
        grads = kto_grad(batch, z0, cfg)
        h = 1e-5
        for i, example in enumerate(batch):
            # Only -v/n in the batch mean depends on this example's policy
            # log-probability; differencing just that term gives the same
            # derivative without the constant lambda_y terms drowning tiny
            # values in float cancellation.
            def shifted(delta):
                bumped = KtoExample(
                    example.policy_logprob + delta, example.ref_logprob, example.desirable
                )
                return -kto_value(bumped, z0, cfg) / n

            numeric = (shifted(h) - shifted(-h)) / (2 * h)
            # central differences cannot resolve gradients below the rounding
            # noise of v itself (ulp(v)/2h); saturated sigmoids hit this
            weight = cfg.lambda_d if example.desirable else cfg.lambda_u
            noise_floor = 8.0 * weight * np.finfo(float).eps / (2 * h)
            assert abs(grads[i] - numeric) <= 1e-4 * max(abs(grads[i]), abs(numeric)) + noise_floor


def test_gradient_sign_convention():
    cfg = KtoConfig()
    batch = [ex(-1.0, -2.0, True), ex(-1.0, -2.0, False)]
    grads = kto_grad(batch, 0.0, cfg)
    # pushing up the policy probability of a desirable sequence lowers the loss
    assert grads[0] < 0.0
    assert grads[1] > 0.0
    # same |r - z0| and weights: antisymmetric up to rounding
    assert grads[0] == pytest.approx(-grads[1], rel=1e-12)


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        kto_loss([], 0.0)
    with pytest.raises(ValueError):
        kto_grad([], 0.0)
    with pytest.raises(ValueError):
        sft_loss([])


# ---------------------------------------------------------------------------
# SFT loss


def test_sft_all_ones_is_zero():
    assert sft_loss([[1.0, 1.0, 1.0], [1.0]]) == 0.0


def test_sft_hand_value():
    p = math.exp(-0.5)
    batch = [[p, p], [1.0, 1.0, 1.0, 1.0]]
    assert sft_loss(batch) == pytest.approx(0.25, abs=1e-12)


def test_sft_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        sft_loss([[0.0, 0.5]])
    with pytest.raises(ValueError):
        sft_loss([[1.2]])
    with pytest.raises(ValueError):
        sft_loss([[]])


# ---------------------------------------------------------------------------
# validation and I/O


def test_example_validation():
    with pytest.raises(ValueError):
        ex(0.5, -1.0, True)
    with pytest.raises(ValueError):
        ex(-1.0, math.inf, True)
    with pytest.raises(ValueError):
        ex(math.nan, -1.0, False)
    ex(0.0, 0.0, True)  # zero is a legal log-probability


def test_load_kto_batch(tmp_path):
    rows = [
        {"policy_logprob": -1.5, "ref_logprob": -2.0, "desirable": True},
        {"policy_logprob": -4.0, "ref_logprob": -3.0, "desirable": False},
    ]
    path = tmp_path / "batch.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n")
    batch = load_kto_batch(path)
    assert len(batch) == 2
    assert batch[0].policy_logprob == -1.5
    assert batch[1].desirable is False

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"policy_logprob": -1.0}\n')
    with pytest.raises(ValueError, match="line 1"):
        load_kto_batch(bad)


def test_kto_report_shape():
    batch = [ex(-1.0, -2.0, True), ex(-3.0, -2.5, False), ex(-0.5, -0.25, True)]
    report = kto_report(batch)
    assert report["n_examples"] == 3
    assert report["z0"] == pytest.approx(estimate_z0(batch))
    assert report["loss"] == pytest.approx(kto_loss(batch, estimate_z0(batch)))
    assert len(report["grads"]) == 3

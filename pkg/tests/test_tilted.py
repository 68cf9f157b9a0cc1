from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from eprcert.qlin import SX, SY, SZ, operator_norm
from eprcert.rigidity import prepare_strategy, soundness_quantities
from eprcert.strategies import honest_strategy, perturbed_honest
from eprcert.tilted import (
    HAT_VARIANTS,
    PRINTED_HAT_VARIANT,
    RESOLVED_HAT_VARIANT,
    SAFE_THETA,
    TiltedBudgetError,
    TiltedParams,
    TiltedStrategy,
    bell_value,
    blowup_factor,
    chsh_consistency,
    game_win_probability,
    hat_operators,
    hat_residuals,
    optimal_tilted_strategy,
    psi_theta,
    psi_theta_matrix,
    resolve_hat_variant,
    schmidt_angle,
    seesaw,
    self_test_observables,
    tilted_conditions_residuals,
    tilted_extended_state,
    tilted_honest,
    tilted_pipeline,
    u_j_operator,
    upst_residual,
    variant_label,
)

ALPHAS = (0.5, 1.0, 1.5)
# max over the pipeline's swap residuals divided by the largest input condition residual,
# measured on rotated-X inputs at theta = 0.5 (ratio 0.7071 for every eta tried)
SWAP_RESIDUAL_K = 0.75
# hat consistency residual divided by sqrt(value gap), measured at alpha = 1 (0.812..0.814)
HAT_SQRT_K = 0.85


def _rotated_x(n, theta, eta):
    """Honest tilted inputs with Alice's first ``X`` turned towards ``Y``: anti-commutation survives."""
    psi, ops = tilted_honest(n, theta)
    x = math.cos(eta) * SX + math.sin(eta) * SY
    rest = np.eye(2 ** (n - 1))
    ops = {"A": [(np.kron(x, rest), ops["A"][0][1])] + list(ops["A"][1:]), "B": list(ops["B"])}
    return psi, ops


# -- states, parameters and the Bell value ------------------------------------------------


def test_psi_theta_examples():
    assert np.allclose(psi_theta(math.pi / 4).amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert np.allclose(psi_theta(0.0).amplitudes, [1, 0, 0, 0])
    assert np.allclose(psi_theta_matrix(0.3), np.diag([math.cos(0.3), math.sin(0.3)]))


@given(st.floats(0.0, math.pi / 2))
def test_psi_theta_normalized(theta):
    assert abs(np.linalg.norm(psi_theta(theta).amplitudes) - 1) < 1e-12


def test_identity_observables_value():
    eye = np.eye(2, dtype=complex)
    s = TiltedStrategy(psi_theta_matrix(0.4), (eye, eye), (eye, eye), require_balanced=False)
    assert bell_value(s, 1.0) == pytest.approx(3.0, abs=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_classical_maximum(alpha):
    best = max(alpha * a0 + a0 * (b0 + b1) + a1 * (b0 - b1)
               for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4))
    assert best == pytest.approx(2 + alpha)


def test_params_relation():
    for alpha in ALPHAS:
        p = TiltedParams.from_alpha(alpha)
        assert math.tan(p.theta) ** 2 == pytest.approx((4 - alpha ** 2) / (2 * alpha ** 2))
        assert p.optimum == pytest.approx(math.sqrt(8 + 2 * alpha ** 2))
        assert p.to_dict()["schmidt_angle"] == pytest.approx(p.theta / 2)
    with pytest.raises(ValueError):
        TiltedParams.from_alpha(2.0)
    with pytest.raises(ValueError):
        TiltedParams.from_alpha(0.0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_optimal_strategy(alpha):
    s = optimal_tilted_strategy(alpha)
    p = TiltedParams.from_alpha(alpha)
    assert bell_value(s, alpha) == pytest.approx(p.optimum, abs=1e-9)
    assert schmidt_angle(s) == pytest.approx(p.schmidt_angle, abs=1e-6)


def test_alpha_one_optimum_is_sqrt10():
    assert bell_value(optimal_tilted_strategy(1.0), 1.0) == pytest.approx(math.sqrt(10), abs=1e-9)


def test_small_alpha_approaches_chsh():
    s = optimal_tilted_strategy(0.05)
    assert bell_value(s, 0.05) == pytest.approx(2 * math.sqrt(2), abs=1e-3)
    assert schmidt_angle(s) == pytest.approx(math.pi / 4, abs=0.05)


@settings(max_examples=12)
@given(st.floats(0.1, 1.9), st.sampled_from([(2, 2), (2, 4), (4, 4), (4, 8)]), st.integers(0, 10 ** 6))
def test_seesaw_never_exceeds_optimum(alpha, dims, seed):
    res = seesaw(alpha, dims, seed, max_iter=200)
    assert res.value <= math.sqrt(8 + 2 * alpha ** 2) + 1e-6


def test_game_probability_at_zero_is_chsh():
    assert game_win_probability(2 * math.sqrt(2), 0.0) == pytest.approx(math.cos(math.pi / 8) ** 2)
    assert game_win_probability(-4.0, 0.0) == 0.0


# -- structural conditions --------------------------------------------------------------


@given(st.floats(0.1, math.pi / 2 - 0.1), st.integers(1, 2))
def test_honest_conditions_vanish(theta, n):
    psi, ops = tilted_honest(n, theta)
    assert tilted_conditions_residuals(ops, psi, theta).max <= 1e-9


def test_ideal_qubit_relations():
    theta = 0.6
    psi, ops = tilted_honest(1, theta)
    res = tilted_conditions_residuals(ops, psi, theta)
    assert max(res.zz_stabilizer.values()) <= 1e-12
    assert max(res.cross_relation.values()) <= 1e-12


def test_conditions_grow_continuously():
    theta = 0.5
    vals = []
    for eta in (1e-4, 0.01, 0.05, 0.1, 0.2):
        psi, ops = _rotated_x(2, theta, eta)
        vals.append(tilted_conditions_residuals(ops, psi, theta).max)
    assert vals[0] < 1e-3
    assert all(a < b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("eta", [0.05, 0.1, 0.2])
def test_cross_relation_reduces_to_stabilizer_at_pi_over_4(eta):
    psi, ops = _rotated_x(2, math.pi / 4, eta)
    res = tilted_conditions_residuals(ops, psi, math.pi / 4)
    stab = np.linalg.norm(ops["A"][0][0] @ psi @ ops["B"][0][0].T - psi)
    assert res.cross_relation["A", 0] == pytest.approx(stab, abs=1e-12)
    assert res.cross_relation["B", 0] == pytest.approx(stab, abs=1e-12)


# -- controlled swaps and the pipeline --------------------------------------------------------


@pytest.mark.parametrize("literal", [False, True])
def test_u_j_is_unitary(literal):
    _, ops = tilted_honest(2, 0.5)
    u = u_j_operator(ops["A"][1], 1, 2, literal=literal)
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]))


def _upst(theta, literal):
    n = 2
    psi, ops = tilted_honest(n, theta)
    psi_p = tilted_extended_state(psi, n, theta)
    us = {s: [u_j_operator(ops[s][j], j, n, literal=literal) for j in range(n)] for s in "AB"}
    return max(upst_residual(us["A"][j], us["B"][j], psi_p, j, n, psi.shape, theta) for j in range(n))


def test_circuit_order_places_tilted_pair():
    theta = TiltedParams.from_alpha(1.0).theta
    assert _upst(theta, literal=False) <= 1e-9
    assert _upst(math.pi / 4, literal=False) <= 1e-9


def test_literal_order_copies_instead_of_swapping():
    assert _upst(TiltedParams.from_alpha(1.0).theta, literal=True) > 0.1


@pytest.mark.parametrize("theta", [TiltedParams.from_alpha(1.0).theta, 0.3, math.pi / 4])
def test_exact_pipeline(theta):
    rep = tilted_pipeline(*tilted_honest(2, theta), theta)
    assert rep.swap_residual_max <= 1e-8
    assert max(rep.primed_closeness.values()) <= 1e-9
    assert max(rep.upst.values()) <= 1e-9
    assert rep.exact_primed_commutator_max <= 1e-9
    assert rep.exact_primed_anticommutator_max <= 1e-9
    assert rep.distance <= 1e-8
    json.dumps(rep.to_dict())


@pytest.mark.parametrize("eta", [0.05, 0.1, 0.2])
def test_swap_residuals_scale_with_conditions(eta):
    theta = 0.5
    psi, ops = _rotated_x(2, theta, eta)
    rep = tilted_pipeline(psi, ops, theta)
    eps = rep.conditions.max
    assert eps > 0
    assert rep.swap_residual_max <= SWAP_RESIDUAL_K * eps
    assert rep.distance <= SWAP_RESIDUAL_K * eps


def test_budget():
    psi, ops = tilted_honest(3, 0.5)
    with pytest.raises(TiltedBudgetError):
        tilted_pipeline(psi, ops, 0.5)


# -- hat operators --------------------------------------------------------------------------


@pytest.mark.parametrize("alpha", ALPHAS)
def test_exactly_one_variant_survives(alpha):
    s = optimal_tilted_strategy(alpha)
    selected, results = resolve_hat_variant(self_test_observables(s), s.psi, schmidt_angle(s))
    assert selected == [RESOLVED_HAT_VARIANT]
    assert results[PRINTED_HAT_VARIANT].max > 0.1
    assert set(results) == set(HAT_VARIANTS)


def test_variant_labels():
    assert variant_label(RESOLVED_HAT_VARIANT) == "+(I+Z)"
    assert variant_label(PRINTED_HAT_VARIANT) == "-(I-Z)"


def test_hat_at_pi_over_4_is_plain_x():
    xhat, z = hat_operators(SX, SZ, math.pi / 4)
    assert np.allclose(xhat, SX)
    psi, ops = tilted_honest(1, math.pi / 4)
    res = hat_residuals({s: ops[s][0] for s in "AB"}, psi, math.pi / 4)
    assert res.max <= 1e-9


def test_hat_degrades_like_sqrt_gap():
    alpha = 1.0
    s = optimal_tilted_strategy(alpha)
    theta = schmidt_angle(s)
    for eta in (0.01, 0.03, 0.1, 0.3):
        rot = expm(-0.5j * eta * SY)
        t = TiltedStrategy(s.psi, s.a, (rot @ s.b[0] @ rot.conj().T, s.b[1]))
        gap = TiltedParams.from_alpha(alpha).optimum - bell_value(t, alpha)
        assert gap > 0
        res = hat_residuals(self_test_observables(t), t.psi, theta)
        assert res.max <= HAT_SQRT_K * math.sqrt(gap)


def test_singular_theta_is_flagged():
    psi, ops = tilted_honest(1, 0.01)
    res = hat_residuals({s: ops[s][0] for s in "AB"}, psi, 0.01)
    assert res.singular
    assert res.blowup == pytest.approx(blowup_factor(0.01)) and res.blowup > 50
    assert res.norm >= 0.5 * res.blowup
    psi, ops = tilted_honest(1, 0.6)
    inside = hat_residuals({s: ops[s][0] for s in "AB"}, psi, 0.6)
    assert not inside.singular
    assert SAFE_THETA[0] <= 0.6 <= SAFE_THETA[1]


def test_hat_norm_matches_blowup_order():
    for theta in (0.1, 0.4, 0.7):
        xhat, _ = hat_operators(SX, SZ, theta)
        assert operator_norm(xhat) <= blowup_factor(theta)


# -- agreement with the maximally entangled machinery -----------------------------------------


@pytest.mark.parametrize("strategy", [honest_strategy(2), perturbed_honest(2, 0.2, "Z")],
                         ids=["honest", "perturbedZ"])
def test_agrees_with_swap_machinery(strategy):
    sound = soundness_quantities(prepare_strategy(strategy))
    ops = {s: sound.pairs(s) for s in "AB"}
    diffs = chsh_consistency(sound.psi, ops)
    assert max(diffs.values()) <= 1e-9

from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eprcert.chsh import (
    CHSH_OPTIMUM,
    CLASSICAL_OPTIMUM,
    GameStrategy,
    UnbalancedReflectionError,
    anticommutator_norm,
    chsh_value,
    extract_qubit,
    ideal_chsh_state,
    ideal_state_distance,
    optimal_strategy,
    pad_to_balanced,
    rounded_x,
    win_probability,
)
from eprcert.qlin import I2, SX, SZ, epr_state, random_reflection, random_state, random_unitary

seeds = st.integers(0, 2 ** 32 - 1)


def brute_win(a, b, psi):
    """Win probability by outcome enumeration with explicit projectors."""
    psi = np.asarray(psi).reshape(-1)
    total = 0.0
    for x, y in product((0, 1), repeat=2):
        for s, t in product((1, -1), repeat=2):
            if s * t != (-1) ** (x * y):
                continue
            pa = (np.eye(a[x].shape[0]) + s * a[x]) / 2
            pb = (np.eye(b[y].shape[0]) + t * b[y]) / 2
            v = np.kron(pa, pb) @ psi
            total += np.vdot(v, v).real / 4
    return total


def test_optimal_value():
    assert win_probability(optimal_strategy()) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)
    assert CHSH_OPTIMUM == pytest.approx(0.8535533905932737, abs=1e-15)


def test_trivial_strategy_is_three_quarters():
    eye = np.eye(2)
    s = GameStrategy(epr_state(), (eye, eye), (eye, eye))
    assert win_probability(s) == pytest.approx(0.75, abs=1e-12)


def test_classical_optimum_by_enumeration():
    best = 0.0
    for signs in product((1, -1), repeat=4):
        ops = [np.array([[s]]) for s in signs]
        best = max(best, chsh_value(*ops, np.ones((1, 1))))
    assert best == pytest.approx(CLASSICAL_OPTIMUM)


@given(seeds, st.sampled_from([2, 4]), st.sampled_from([2, 4]))
def test_value_matches_enumeration_and_tsirelson(seed, da, db):
    rng = np.random.default_rng(seed)
    a = [random_reflection(da, rng, plus=int(rng.integers(0, da + 1))) for _ in range(2)]
    b = [random_reflection(db, rng, plus=int(rng.integers(0, db + 1))) for _ in range(2)]
    psi = random_state(da * db, rng).reshape(da, db)
    v = chsh_value(*a, *b, psi)
    assert v == pytest.approx(brute_win(a, b, psi), abs=1e-12)
    assert v <= CHSH_OPTIMUM + 1e-12


def test_swapped_players_same_value():
    s = optimal_strategy()
    assert win_probability(s.swapped()) == pytest.approx(win_probability(s), abs=1e-12)


def test_pad_to_balanced():
    r, padded = pad_to_balanced(I2)
    assert padded and abs(np.trace(r)) < 1e-12
    r, padded = pad_to_balanced(SZ)
    assert not padded


def test_extract_qubit_exact_case():
    ext = extract_qubit(SZ, SX, epr_state(), 1)
    assert ext.residual < 1e-12
    v = ext.isomorphism
    assert np.allclose(v @ SZ @ v.conj().T, SZ)
    assert np.allclose(v @ SX @ v.conj().T, SX)


def test_unbalanced_raises():
    with pytest.raises(UnbalancedReflectionError):
        rounded_x(np.diag([1, 1, 1, -1]), np.eye(4))


@given(seeds, st.integers(1, 4))
def test_rounded_x_anticommutes_exactly(seed, half):
    rng = np.random.default_rng(seed)
    r0 = random_reflection(2 * half, rng)
    r1 = random_reflection(2 * half, rng)
    xb = rounded_x(r0, r1)
    assert anticommutator_norm(r0, xb) < 1e-10
    assert np.allclose(xb @ xb, np.eye(2 * half), atol=1e-10)


@given(seeds)
def test_ideal_state_distance_zero_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    # optimal strategy dressed with hidden space and random local unitaries
    ua, ub = random_unitary(4, rng), random_unitary(4, rng)
    junk = random_state(4, rng).reshape(2, 2)
    psi = np.kron(ideal_chsh_state(), junk).reshape(2, 2, 2, 2).transpose(0, 1, 2, 3).reshape(4, 4)
    psi = ua @ psi @ ub.T
    z_a = ua @ np.kron(SZ, I2) @ ua.conj().T
    x_a = ua @ np.kron(SX, I2) @ ua.conj().T
    h_b = ub @ np.kron(SZ, I2) @ ub.conj().T
    g_b = ub @ np.kron(SX, I2) @ ub.conj().T
    e1 = extract_qubit(z_a, x_a, psi, 1)
    e2 = extract_qubit(h_b, g_b, psi, 2)
    dist, _ = ideal_state_distance(psi, e1, e2)
    assert dist < 1e-9


def test_optimal_strategy_extracts_to_ideal_state():
    s = optimal_strategy()
    e1 = extract_qubit(*s.player1, s.shared_state, 1)
    e2 = extract_qubit(*s.player2, s.shared_state, 2)
    assert e1.residual < 1e-12 and e2.residual < 1e-12
    dist, _ = ideal_state_distance(s.shared_state, e1, e2)
    assert dist < 1e-9
    assert np.linalg.norm(ideal_chsh_state()) == pytest.approx(1.0)

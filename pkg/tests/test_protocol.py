from __future__ import annotations

import json
import math
from collections import Counter
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from eprcert.chsh import CHSH_OPTIMUM
from eprcert.protocol import (
    BRANCH_WEIGHTS,
    OMEGA_OPT,
    InvalidStrategyError,
    ProtocolStrategy,
    Question,
    acceptance_breakdown,
    all_questions,
    dilate_strategy,
    embedded_chsh_value,
    embedded_games,
    evaluate_accept,
    exact_acceptance,
    naimark_dilate,
    pad_strategy_to_balanced,
    permute_strategy,
    run_transcripts,
    sample_question,
)
from eprcert.qlin import SX, SZ, random_state
from eprcert.strategies import (
    embed_qubit,
    honest_strategy,
    lazy_strategy,
    random_strategy,
    sequential_family,
    trivial_strategy,
)
from oracles import brute_acceptance

seeds = st.integers(0, 2 ** 32 - 1)

# exact enumeration of the lazy strategy at n = 3, cross-checked by the brute-force oracle
LAZY_N3 = 0.8434433619633033
LAZY_N3_PAIR_BRANCH = 0.7651650429449552


def test_omega_opt_value():
    assert OMEGA_OPT == pytest.approx(0.9023689270621825, abs=1e-15)
    assert OMEGA_OPT == pytest.approx((1 + 2 * math.cos(math.pi / 8) ** 2) / 3, abs=1e-15)


def test_evaluate_accept_examples():
    assert evaluate_accept(Question(1, 0, 0), -1, -1)
    assert not evaluate_accept(Question(1, 0, 1), 1, -1)
    assert evaluate_accept(Question(2, 0, 1, 1, 1, 0), 1, -1)
    for b in (0, 1):
        assert evaluate_accept(Question(2, 0, 0, 1, b, 1), 1, 1)
    assert not evaluate_accept(Question(3, 1, 1, 0, 1, 1), 1, 1)


def test_question_validation():
    with pytest.raises(ValueError):
        Question(4, 0, 0)
    with pytest.raises(ValueError):
        Question(2, 0, 0, 0, 1, 1)
    with pytest.raises(ValueError):
        Question(1, 0, 0, 1, 0, 0)
    with pytest.raises(ValueError):
        sample_question(1, np.random.default_rng(0))


def test_pair_question_sorted_and_component():
    q = Question(2, 2, 1, 0, 1, 0)
    assert q.pair_question() == ((0, 0), (2, 1))
    assert q.pair_key == (0, 2, 0, 1)
    assert q.component_for_i() == 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_all_questions_weights(n):
    qs = list(all_questions(n))
    assert sum(w for w, _ in qs) == 1
    assert len(qs) == 2 * n + 2 * 8 * n * (n - 1)
    assert all(isinstance(w, Fraction) for w, _ in qs)
    assert sum(BRANCH_WEIGHTS) == 1


def test_sampled_questions_uniform_chi_squared():
    n = 3
    rng = np.random.default_rng(20240601)
    weights = {q: w for w, q in all_questions(n)}
    count = 60000
    obs = Counter(sample_question(n, rng) for _ in range(count))
    keys = list(weights)
    f_obs = [obs[k] for k in keys]
    f_exp = [float(weights[k]) * count for k in keys]
    assert set(obs) <= set(keys)
    assert chisquare(f_obs, f_exp).pvalue > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_honest_completeness(n):
    assert exact_acceptance(honest_strategy(n)) == pytest.approx(OMEGA_OPT, abs=1e-12)


def test_honest_embedded_games_all_optimal():
    s = honest_strategy(3)
    for i, j, c, pp in embedded_games(3):
        assert embedded_chsh_value(s, i, j, c, pp) == pytest.approx(CHSH_OPTIMUM, abs=1e-12)


def test_trivial_strategy_five_sixths():
    assert exact_acceptance(trivial_strategy(3)) == pytest.approx(5 / 6, abs=1e-12)
    assert brute_acceptance(trivial_strategy(3)) == pytest.approx(5 / 6, abs=1e-12)


def test_lazy_strategy_regression():
    s = lazy_strategy(3)
    br = acceptance_breakdown(s)
    assert br["branch1"] == pytest.approx(1.0, abs=1e-12)
    assert br["branch2"] == pytest.approx(LAZY_N3_PAIR_BRANCH, abs=1e-12)
    assert br["total"] == pytest.approx(LAZY_N3, abs=1e-12)
    assert brute_acceptance(s) == pytest.approx(LAZY_N3, abs=1e-12)
    assert br["total"] < OMEGA_OPT


def test_lazy_passes_naive_same_index_protocol():
    # both players asked about the same (i, a): CHSH on the single shared pair
    s = lazy_strategy(2)
    from eprcert.chsh import chsh_value
    from eprcert.strategies import IDEAL_PAIR_OBSERVABLES
    v = chsh_value(s.z["A"][0], s.x["A"][0], *IDEAL_PAIR_OBSERVABLES, s.psi)
    assert v == pytest.approx(CHSH_OPTIMUM, abs=1e-12)


@pytest.mark.parametrize("projective", [True, False])
@pytest.mark.parametrize("n,dims", [(2, (2, 2)), (2, (2, 4)), (3, (2, 2))])
def test_exact_matches_brute_force(projective, n, dims):
    rng = np.random.default_rng(hash((projective, n, dims)) % 2 ** 32)
    s = random_strategy(n, dims, rng, projective=projective)
    assert exact_acceptance(s) == pytest.approx(brute_acceptance(s), abs=1e-12)


@given(seeds)
def test_breakdown_identity(seed):
    rng = np.random.default_rng(seed)
    s = random_strategy(2, (2, 2), rng, projective=bool(seed % 2))
    br = acceptance_breakdown(s)
    n = 2
    games = {pp: [embedded_chsh_value(s, i, j, c, pp) for i, j, c, q in embedded_games(n) if q == pp]
             for pp in ("A", "B")}
    assert len(games["A"]) + len(games["B"]) == 4 * n * (n - 1)
    expected = br["branch1"] / 3 + (2 / 3) * np.mean(games["A"] + games["B"])
    assert br["total"] == pytest.approx(expected, abs=1e-12)


@given(seeds, st.sampled_from(list(permutations(range(3)))))
def test_permutation_invariance(seed, perm):
    rng = np.random.default_rng(seed)
    s = random_strategy(3, (2, 2), rng, projective=bool(seed % 2))
    assert exact_acceptance(permute_strategy(s, perm)) == pytest.approx(exact_acceptance(s), abs=1e-12)


@given(seeds, st.sampled_from([(2, 2), (2, 4), (4, 4), (8, 2)]))
def test_soundness_upper_bound_random(seed, dims):
    rng = np.random.default_rng(seed)
    s = random_strategy(2, dims, rng, projective=bool(seed % 2))
    assert exact_acceptance(s) <= OMEGA_OPT + 1e-9


def test_soundness_upper_bound_grid():
    # honest state and single-index reflections; pair observables on the x-z circle
    n = 2
    base = honest_strategy(n)
    best = 0.0
    grid = np.linspace(0, 2 * math.pi, 17)[:-1]
    for t0 in grid:
        for t1 in grid:
            obs = [math.cos(t) * SZ + math.sin(t) * SX for t in (t0, t1)]
            pairs = {(0, 1, b, c): sequential_family(embed_qubit(obs[b], 0, n), embed_qubit(obs[c], 1, n))
                     for b in (0, 1) for c in (0, 1)}
            s = ProtocolStrategy.build(n, base.psi, base.z, base.x, {"A": pairs, "B": pairs}, projective=True)
            best = max(best, exact_acceptance(s))
    assert best <= OMEGA_OPT + 1e-9
    assert best == pytest.approx(OMEGA_OPT, abs=1e-12)  # the grid contains the honest angles


def test_invalid_strategy_rejected():
    s = honest_strategy(2)
    bad = dict(s.pairs["A"])
    bad.pop((0, 1, 0, 0))
    with pytest.raises(InvalidStrategyError):
        ProtocolStrategy.build(2, s.psi, s.z, s.x, {"A": bad, "B": s.pairs["B"]})
    with pytest.raises(InvalidStrategyError):
        ProtocolStrategy.build(2, s.psi, {"A": [SZ, SZ], "B": s.z["B"]}, s.x, s.pairs)


def test_transcripts_consistent_and_reproducible():
    s = honest_strategy(2)
    t1, p1 = run_transcripts(s, 11, 3000)
    t2, p2 = run_transcripts(s, 11, 3000)
    assert p1 == p2
    assert [t.to_record() for t in t1] == [t.to_record() for t in t2]
    for t in t1:
        rec = t.to_record()
        q = t.question
        x = rec["x"]
        y = rec["y"]
        assert t.accepted == evaluate_accept(q, x, y)
        if q.branch == 1:
            assert set(rec) == {"branch", "i", "a", "x", "y", "accepted"}
        else:
            assert set(rec) == {"branch", "i", "j", "a", "b", "c", "x", "y", "y_prime", "accepted"}
        json.dumps(rec)


@pytest.mark.parametrize("make", [lambda: honest_strategy(2), lambda: lazy_strategy(3),
                                  lambda: random_strategy(2, (2, 4), np.random.default_rng(3), False)])
def test_transcripts_converge_to_exact(make):
    s = make()
    n_rounds = 20000
    _, p = run_transcripts(s, 5, n_rounds)
    assert abs(p - exact_acceptance(s)) <= 4 * math.sqrt(1 / n_rounds)


@given(seeds)
def test_transcripts_accept_generator(seed):
    rng = np.random.default_rng(seed)
    ts, p = run_transcripts(trivial_strategy(2), rng, 50)
    assert len(ts) == 50
    assert 0 <= p <= 1


def test_naimark_preserves_statistics_on_random_states():
    rng = np.random.default_rng(7)
    s = random_strategy(2, (3, 2), rng, projective=False)
    family = s.pairs["A"][(0, 1, 0, 1)]
    dil = naimark_dilate(family)
    for p in dil.projectors:
        assert np.allclose(p @ p, p, atol=1e-10)
    assert np.allclose(sum(dil.projectors), np.eye(dil.projectors[0].shape[0]), atol=1e-10)
    for _ in range(100):
        v = random_state(3, rng)
        jv = dil.isometry @ v
        for m, p in zip(family, dil.projectors):
            assert np.vdot(jv, p @ jv).real == pytest.approx(np.linalg.norm(m @ v) ** 2, abs=1e-12)


def test_naimark_projective_passthrough():
    s = honest_strategy(2)
    fam = s.pairs["A"][(0, 1, 0, 0)]
    dil = naimark_dilate(fam)
    assert dil.unitary is None
    assert dilate_strategy(s) is s


@pytest.mark.parametrize("make", [lambda: lazy_strategy(2),
                                  lambda: random_strategy(2, (2, 2), np.random.default_rng(9), False)])
def test_dilated_strategy_same_acceptance(make):
    s = make()
    d = dilate_strategy(s)
    assert d.projective
    assert exact_acceptance(d) == pytest.approx(exact_acceptance(s), abs=1e-12)


def test_padding_preserves_acceptance():
    s = trivial_strategy(2, dim=2)
    padded = pad_strategy_to_balanced(s)
    assert padded.dims == (4, 4)
    for p in ("A", "B"):
        for r in padded.z[p]:
            assert abs(np.trace(r).real) < 1e-9
    assert exact_acceptance(padded) == pytest.approx(exact_acceptance(s), abs=1e-12)

"""Verifier for the three-branch n-qubit test.

Indices are 0-based throughout.  A pair question is always delivered sorted,
``((i, b), (j, c))`` with ``i < j``, and the pair player's two answers are stored
in that order.

Branches (each with probability 1/3):

1. both players get ``(i, a)``; accept iff ``x == y``.
2. Alice gets ``(i, a)``, Bob gets the pair ``{(i, b), (j, c)}``; accept iff
   ``x * y == (-1)**(a*b)`` where ``y`` answers ``(i, b)``.
3. as 2 with the players exchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.linalg import null_space

from .chsh import CHSH_OPTIMUM, chsh_value
from .qlin import StateVector, bipartite_layout, check_reflection, correlator, dagger

OMEGA_OPT = (1 + 2 * CHSH_OPTIMUM) / 3
BRANCH_WEIGHTS = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))
OUTCOMES = ((1, 1), (1, -1), (-1, 1), (-1, -1))
PLAYERS = ("A", "B")
COMPLETENESS_TOL = 1e-10

PairKey = tuple[int, int, int, int]  # (i, j, b, c) with i < j


class InvalidStrategyError(ValueError):
    pass


def other(player: str) -> str:
    return "B" if player == "A" else "A"


@dataclass(frozen=True)
class Question:
    """One round's questions.  ``j``, ``b``, ``c`` are ``None`` in branch 1."""

    branch: int
    i: int
    a: int
    j: int | None = None
    b: int | None = None
    c: int | None = None

    def __post_init__(self):
        if self.branch not in (1, 2, 3):
            raise ValueError(f"branch must be 1, 2 or 3, got {self.branch}")
        if self.branch == 1:
            if any(v is not None for v in (self.j, self.b, self.c)):
                raise ValueError("branch 1 questions carry only (i, a)")
        else:
            if None in (self.j, self.b, self.c):
                raise ValueError("pair questions need j, b and c")
            if self.i == self.j:
                raise ValueError("pair questions need i != j")

    @property
    def single_player(self) -> str | None:
        return {2: "A", 3: "B"}.get(self.branch)

    @property
    def pair_player(self) -> str | None:
        return {2: "B", 3: "A"}.get(self.branch)

    def pair_question(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """The pair question as delivered: sorted by index."""
        first, second = (self.i, self.b), (self.j, self.c)
        return (first, second) if self.i < self.j else (second, first)

    @property
    def pair_key(self) -> PairKey:
        (i, b), (j, c) = self.pair_question()
        return (i, j, b, c)

    def component_for_i(self) -> int:
        """Position of ``(i, b)`` within the sorted pair answer."""
        return 0 if self.i < self.j else 1


def sample_question(n: int, rng: np.random.Generator) -> Question:
    if n < 2:
        raise ValueError("the protocol needs n >= 2")
    branch = int(rng.integers(1, 4))
    i = int(rng.integers(n))
    a = int(rng.integers(2))
    if branch == 1:
        return Question(1, i, a)
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    b, c = (int(v) for v in rng.integers(2, size=2))
    return Question(branch, i, a, j, b, c)


def evaluate_accept(q: Question, x: int, y: int) -> bool:
    """``x`` is the single-question answer; ``y`` the pair player's answer to ``(i, b)``."""
    if q.branch == 1:
        return x == y
    return x * y == (-1) ** (q.a * q.b)


def all_questions(n: int) -> Iterator[tuple[Fraction, Question]]:
    """Every question with its exact probability."""
    w1 = BRANCH_WEIGHTS[0] / (2 * n)
    for i in range(n):
        for a in (0, 1):
            yield w1, Question(1, i, a)
    for branch, weight in ((2, BRANCH_WEIGHTS[1]), (3, BRANCH_WEIGHTS[2])):
        w = weight / (n * (n - 1) * 8)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for a in (0, 1):
                    for b in (0, 1):
                        for c in (0, 1):
                            yield w, Question(branch, i, a, j, b, c)


def _is_projector(m, tol=COMPLETENESS_TOL) -> bool:
    return bool(np.max(np.abs(m @ m - m)) <= tol and np.max(np.abs(m - dagger(m))) <= tol)


def check_family(ops: Sequence[np.ndarray], projective: bool = False) -> None:
    if len(ops) != 4:
        raise InvalidStrategyError("a pair measurement family has exactly four operators")
    dim = ops[0].shape[0]
    total = sum(dagger(m) @ m for m in ops)
    if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
        raise InvalidStrategyError("measurement family is not complete: sum M^dag M != I")
    if projective and not all(_is_projector(m) for m in ops):
        raise InvalidStrategyError("family flagged projective contains a non-projector")


@dataclass(frozen=True)
class ProtocolStrategy:
    """Shared state, single-index reflections and pair measurement families.

    ``z[p][i]``, ``x[p][i]``: reflections of player ``p`` for question ``(i, 0)`` / ``(i, 1)``.
    ``pairs[p][(i, j, b, c)]``: four measurement operators for the sorted pair
    question, ordered as :data:`OUTCOMES` (first sign answers ``(i, b)``).
    """

    n: int
    shared_state: StateVector
    z: Mapping[str, tuple[np.ndarray, ...]] = field(repr=False)
    x: Mapping[str, tuple[np.ndarray, ...]] = field(repr=False)
    pairs: Mapping[str, Mapping[PairKey, tuple[np.ndarray, ...]]] = field(repr=False)
    projective: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.n < 2:
            raise InvalidStrategyError("a protocol strategy needs n >= 2")
        dims = dict(zip(PLAYERS, self.shared_state.layout.dims))
        if len(dims) != 2:
            raise InvalidStrategyError("shared state must be bipartite")
        for p in PLAYERS:
            for family in (self.z, self.x):
                if len(family[p]) != self.n:
                    raise InvalidStrategyError(f"player {p} needs {self.n} single-index reflections")
                for r in family[p]:
                    if r.shape != (dims[p],) * 2:
                        raise InvalidStrategyError("single-index reflection has the wrong dimension")
                    try:
                        check_reflection(r)
                    except ValueError as exc:
                        raise InvalidStrategyError(str(exc)) from None
            expected = {(i, j, b, c) for i in range(self.n) for j in range(i + 1, self.n)
                        for b in (0, 1) for c in (0, 1)}
            if set(self.pairs[p]) != expected:
                raise InvalidStrategyError(f"player {p} pair families do not cover all sorted questions")
            for ops in self.pairs[p].values():
                check_family(ops, self.projective)

    @classmethod
    def build(cls, n, psi, z, x, pairs, projective=False, name="custom") -> "ProtocolStrategy":
        psi = np.asarray(psi, dtype=complex)
        state = StateVector(bipartite_layout(*psi.shape), psi.reshape(-1))
        freeze = lambda ops: tuple(np.asarray(m, dtype=complex) for m in ops)  # noqa: E731
        return cls(
            n=n,
            shared_state=state,
            z={p: freeze(z[p]) for p in PLAYERS},
            x={p: freeze(x[p]) for p in PLAYERS},
            pairs={p: {k: freeze(v) for k, v in pairs[p].items()} for p in PLAYERS},
            projective=projective,
            name=name,
        )

    @property
    def psi(self) -> np.ndarray:
        return self.shared_state.as_matrix()

    @property
    def dims(self) -> tuple[int, int]:
        return self.shared_state.layout.dims

    def single(self, player: str, i: int, a: int) -> np.ndarray:
        return (self.z if a == 0 else self.x)[player][i]

    def effects(self, player: str, key: PairKey) -> tuple[np.ndarray, ...]:
        return tuple(dagger(m) @ m for m in self.pairs[player][key])


def marginal_observable(strategy: ProtocolStrategy, player: str, i: int, b: int,
                        j: int, c: int) -> np.ndarray:
    """``R^{jc}_{ib}``: the +-1 observable answering ``(i, b)``, marginalized over ``(j, c)``."""
    if i == j:
        raise ValueError("i and j must differ")
    if i < j:
        effects = strategy.effects(player, (i, j, b, c))
        signs = [o[0] for o in OUTCOMES]
    else:
        effects = strategy.effects(player, (j, i, c, b))
        signs = [o[1] for o in OUTCOMES]
    return sum(s * e for s, e in zip(signs, effects))


def embedded_chsh_value(strategy: ProtocolStrategy, i: int, j: int, c: int, pair_player: str) -> float:
    """Win probability of the CHSH game on index ``i`` with dummy ``(j, c)``."""
    if i == j:
        raise ValueError("i and j must differ")
    single = other(pair_player)
    a0, a1 = strategy.z[single][i], strategy.x[single][i]
    b0 = marginal_observable(strategy, pair_player, i, 0, j, c)
    b1 = marginal_observable(strategy, pair_player, i, 1, j, c)
    psi = strategy.psi if single == "A" else strategy.psi.T
    return chsh_value(a0, a1, b0, b1, psi)


def branch1_value(strategy: ProtocolStrategy) -> float:
    psi = strategy.psi
    total = 0.0
    for i in range(strategy.n):
        for a in (0, 1):
            total += (1 + correlator(strategy.single("A", i, a), strategy.single("B", i, a), psi)) / 2
    return total / (2 * strategy.n)


def embedded_games(n: int) -> Iterator[tuple[int, int, int, str]]:
    for pair_player in ("B", "A"):
        for i in range(n):
            for j in range(n):
                if i != j:
                    for c in (0, 1):
                        yield i, j, c, pair_player


def acceptance_breakdown(strategy: ProtocolStrategy) -> dict[str, float]:
    """Per-branch acceptance probabilities and their exact-weighted total."""
    n = strategy.n
    per_branch = {"branch1": branch1_value(strategy)}
    for name, pair_player in (("branch2", "B"), ("branch3", "A")):
        vals = [embedded_chsh_value(strategy, i, j, c, pair_player)
                for i, j, c, pp in embedded_games(n) if pp == pair_player]
        per_branch[name] = float(np.mean(vals))
    total = sum(float(w) * per_branch[k] for w, k in zip(BRANCH_WEIGHTS, ("branch1", "branch2", "branch3")))
    per_branch["total"] = total
    return per_branch


def exact_acceptance(strategy: ProtocolStrategy) -> float:
    return acceptance_breakdown(strategy)["total"]


# -- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class Transcript:
    question: Question
    alice_answers: tuple[int, ...]
    bob_answers: tuple[int, ...]
    accepted: bool

    def answers(self, player: str) -> tuple[int, ...]:
        return self.alice_answers if player == "A" else self.bob_answers

    def to_record(self) -> dict:
        q = self.question
        rec = {"branch": q.branch, "i": q.i}
        if q.branch == 1:
            rec.update(a=q.a, x=self.alice_answers[0], y=self.bob_answers[0])
        else:
            single = self.answers(q.single_player)[0]
            pair = self.answers(q.pair_player)
            k = q.component_for_i()
            rec.update(j=q.j, a=q.a, b=q.b, c=q.c, x=single, y=pair[k], y_prime=pair[1 - k])
        rec["accepted"] = self.accepted
        return rec


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    cdf = np.cumsum(probs)
    r = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, r, side="right"), len(probs) - 1))


class _Simulator:
    """Born-rule sampling of both players' measurements on the state matrix."""

    def __init__(self, strategy: ProtocolStrategy):
        self.s = strategy
        self.psi = strategy.psi
        self._proj = {}
        for p in PLAYERS:
            for a, fam in ((0, strategy.z), (1, strategy.x)):
                for i, r in enumerate(fam[p]):
                    eye = np.eye(r.shape[0])
                    self._proj[p, i, a] = ((eye + r) / 2, (eye - r) / 2)

    def _measure(self, psi, player, kraus, rng):
        outs = [k @ psi if player == "A" else psi @ k.T for k in kraus]
        probs = np.array([np.vdot(o, o).real for o in outs])
        k = _sample_index(probs, rng)
        return k, outs[k] / np.sqrt(probs[k])

    def play(self, q: Question, rng: np.random.Generator) -> Transcript:
        psi = self.psi
        if q.branch == 1:
            ka, psi = self._measure(psi, "A", self._proj["A", q.i, q.a], rng)
            kb, psi = self._measure(psi, "B", self._proj["B", q.i, q.a], rng)
            x, y = (1, -1)[ka], (1, -1)[kb]
            return Transcript(q, (x,), (y,), evaluate_accept(q, x, y))
        sp, pp = q.single_player, q.pair_player
        ks, psi = self._measure(psi, sp, self._proj[sp, q.i, q.a], rng)
        kp, psi = self._measure(psi, pp, self.s.pairs[pp][q.pair_key], rng)
        x = (1, -1)[ks]
        pair = OUTCOMES[kp]
        accepted = evaluate_accept(q, x, pair[q.component_for_i()])
        answers = {sp: (x,), pp: pair}
        return Transcript(q, answers["A"], answers["B"], accepted)


def run_transcripts(strategy: ProtocolStrategy, rng, count: int, chunk_size: int = 4096):
    """Simulate ``count`` rounds.  Returns ``(transcripts, empirical acceptance)``.

    ``rng`` is an integer seed or a ``numpy.random.Generator``.  With an integer
    seed each chunk of rounds draws from its own child of ``SeedSequence(seed)``,
    so results do not depend on how chunks are scheduled.
    """
    if count < 1:
        raise ValueError("count must be positive")
    sim = _Simulator(strategy)
    if isinstance(rng, np.random.Generator):
        streams = [(rng, count)]
    else:
        n_chunks = math.ceil(count / chunk_size)
        children = np.random.SeedSequence(int(rng)).spawn(n_chunks)
        streams = [(np.random.default_rng(ch), min(chunk_size, count - k * chunk_size))
                   for k, ch in enumerate(children)]
    transcripts = []
    for gen, m in streams:
        for _ in range(m):
            transcripts.append(sim.play(sample_question(strategy.n, gen), gen))
    accepted = sum(t.accepted for t in transcripts)
    return transcripts, accepted / count


# -- Naimark dilation ----------------------------------------------------------


@dataclass(frozen=True)
class NaimarkDilation:
    """Projective family on ``H (x) C^4`` reproducing a general family.

    ``isometry`` is ``J v = v (x) |0>``; ``<Jv| projectors[k] |Jv> = ||M_k v||^2``.
    For an already-projective family the projectors are returned unchanged and
    ``isometry`` is the identity.
    """

    projectors: tuple[np.ndarray, ...]
    isometry: np.ndarray
    unitary: np.ndarray | None = None


def _is_projective_family(ops) -> bool:
    return all(_is_projector(m) for m in ops)


def naimark_dilate(family: Sequence[np.ndarray]) -> NaimarkDilation:
    ops = tuple(np.asarray(m, dtype=complex) for m in family)
    check_family(ops)
    dim = ops[0].shape[0]
    if _is_projective_family(ops):
        return NaimarkDilation(ops, np.eye(dim, dtype=complex))
    k_out = len(ops)
    # W v = sum_k M_k v (x) |k>, rows indexed (v, k)
    w = np.stack(ops, axis=1).reshape(dim * k_out, dim)
    comp = null_space(dagger(w))
    v = np.zeros((dim * k_out, dim * k_out), dtype=complex)
    cols = np.arange(dim * k_out).reshape(dim, k_out)
    v[:, cols[:, 0]] = w
    v[:, cols[:, 1:].reshape(-1)] = comp
    projectors = []
    for k in range(k_out):
        sel = np.zeros(k_out)
        sel[k] = 1.0
        p = dagger(v) @ np.kron(np.eye(dim), np.diag(sel)) @ v
        projectors.append((p + dagger(p)) / 2)
    iso = np.kron(np.eye(dim), np.eye(k_out)[:, :1])
    return NaimarkDilation(tuple(projectors), iso, v)


def dilate_strategy(strategy: ProtocolStrategy) -> ProtocolStrategy:
    """Projective strategy on ``H_D (x) C^4`` with the same statistics on every question."""
    if strategy.projective:
        return strategy
    anc = np.eye(4)
    z, x, pairs, iso = {}, {}, {}, {}
    for p in PLAYERS:
        z[p] = [np.kron(m, anc) for m in strategy.z[p]]
        x[p] = [np.kron(m, anc) for m in strategy.x[p]]
        pairs[p] = {}
        for key, ops in strategy.pairs[p].items():
            dil = naimark_dilate(ops)
            if dil.unitary is None:
                pairs[p][key] = tuple(np.kron(m, anc) for m in dil.projectors)
            else:
                pairs[p][key] = dil.projectors
        iso[p] = np.kron(np.eye(strategy.dims[PLAYERS.index(p)]), anc[:, :1])
    psi = iso["A"] @ strategy.psi @ iso["B"].T
    return ProtocolStrategy.build(strategy.n, psi, z, x, pairs, projective=True,
                                  name=f"{strategy.name}+naimark")


def permute_strategy(strategy: ProtocolStrategy, perm: Sequence[int]) -> ProtocolStrategy:
    """Relabel index ``i`` as ``perm[i]`` consistently for both players."""
    n = strategy.n
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of range(n)")
    z, x, pairs = {}, {}, {}
    for p in PLAYERS:
        z[p] = [None] * n
        x[p] = [None] * n
        for i in range(n):
            z[p][perm[i]] = strategy.z[p][i]
            x[p][perm[i]] = strategy.x[p][i]
        pairs[p] = {}
        for (i, j, b, c), ops in strategy.pairs[p].items():
            pi, pj = perm[i], perm[j]
            if pi < pj:
                pairs[p][(pi, pj, b, c)] = ops
            else:
                # first and second answers trade places
                by_outcome = dict(zip(OUTCOMES, ops))
                pairs[p][(pj, pi, c, b)] = tuple(by_outcome[(yy, xx)] for xx, yy in OUTCOMES)
    return ProtocolStrategy.build(n, strategy.psi, z, x, pairs, strategy.projective,
                                  name=f"{strategy.name}+perm")


def pad_strategy_to_balanced(strategy: ProtocolStrategy, tol: float = 1e-8) -> ProtocolStrategy:
    """Double a player's space where some ``Z_i`` is unbalanced.

    Reflections become ``R (+) (-R)``, measurement operators ``M (+) M`` and the
    state lives in the first block, so every outcome distribution is unchanged.
    """
    pad = {
        p: any(abs(np.trace(r).real) > tol for r in strategy.z[p])
        for p in PLAYERS
    }
    if not any(pad.values()):
        return strategy

    def refl(r, p):
        if not pad[p]:
            return r
        zero = np.zeros_like(r)
        return np.block([[r, zero], [zero, -r]])

    def kraus(m, p):
        if not pad[p]:
            return m
        zero = np.zeros_like(m)
        return np.block([[m, zero], [zero, m]])

    z = {p: [refl(r, p) for r in strategy.z[p]] for p in PLAYERS}
    x = {p: [refl(r, p) for r in strategy.x[p]] for p in PLAYERS}
    pairs = {p: {k: tuple(kraus(m, p) for m in ops) for k, ops in strategy.pairs[p].items()}
             for p in PLAYERS}
    psi = strategy.psi
    if pad["A"]:
        psi = np.vstack([psi, np.zeros_like(psi)])
    if pad["B"]:
        psi = np.hstack([psi, np.zeros_like(psi)])
    return ProtocolStrategy.build(strategy.n, psi, z, x, pairs, strategy.projective,
                                  name=f"{strategy.name}+padded")

"""Strategy constructors: honest, perturbed, lazy, random and the low-dimensional attack."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .qlin import (
    HAD,
    SX,
    SZ,
    anticommutator,
    commutator,
    dagger,
    kron,
    operator_norm,
    random_reflection,
    random_state,
    random_unitary,
)
from .protocol import OUTCOMES, PLAYERS, ProtocolStrategy

# Pair-question observables of the ideal player 2, indexed by the question bit.
IDEAL_PAIR_OBSERVABLES = (HAD, -SX @ HAD @ SX)
ANTICOMMUTATION_TOL = 1e-10


def embed_qubit(op, k: int, n: int) -> np.ndarray:
    """``op`` acting on qubit ``k`` of ``n``."""
    return kron(np.eye(2 ** k), op, np.eye(2 ** (n - 1 - k)))


def sequential_family(first, second) -> tuple[np.ndarray, ...]:
    """Measure observable ``first`` then ``second``: ``M_{x,y} = Q_y P_x``."""
    eye = np.eye(first.shape[0])
    p = {s: (eye + s * first) / 2 for s in (1, -1)}
    q = {s: (eye + s * second) / 2 for s in (1, -1)}
    return tuple(q[y] @ p[x] for x, y in OUTCOMES)


def _pair_families(n: int, observable: Callable[[int, int], np.ndarray]) -> dict:
    """Families for every sorted pair question from per-(index, bit) observables."""
    return {
        (i, j, b, c): sequential_family(observable(i, b), observable(j, c))
        for i, j in combinations(range(n), 2)
        for b in (0, 1)
        for c in (0, 1)
    }


def _honest_parts(n: int):
    z = [embed_qubit(SZ, k, n) for k in range(n)]
    x = [embed_qubit(SX, k, n) for k in range(n)]
    pair_obs = [[embed_qubit(IDEAL_PAIR_OBSERVABLES[b], k, n) for b in (0, 1)] for k in range(n)]
    pairs = _pair_families(n, lambda k, b: pair_obs[k][b])
    return z, x, pairs


def _epr_pairs_matrix(n: int) -> np.ndarray:
    # n EPR pairs between qubit k of Alice and qubit k of Bob
    d = 2 ** n
    return np.eye(d, dtype=complex) / math.sqrt(d)


def honest_strategy(n: int) -> ProtocolStrategy:
    z, x, pairs = _honest_parts(n)
    return ProtocolStrategy.build(
        n, _epr_pairs_matrix(n), {p: z for p in PLAYERS}, {p: x for p in PLAYERS},
        {p: pairs for p in PLAYERS}, projective=True, name="honest",
    )


def perturbed_honest(n: int, eta: float, kind: str = "X") -> ProtocolStrategy:
    """Honest strategy with one of Alice's single-index reflections rotated by ``eta``.

    ``kind="X"``: Alice's ``X_i = cos(eta) X + sin(eta) Z``.
    ``kind="Z"``: Alice's ``Z_i = cos(eta) Z + sin(eta) X``.
    """
    if kind not in ("X", "Z"):
        raise ValueError("kind must be 'X' or 'Z'")
    z, x, pairs = _honest_parts(n)
    base, other = (SX, SZ) if kind == "X" else (SZ, SX)
    rotated = [embed_qubit(math.cos(eta) * base + math.sin(eta) * other, k, n) for k in range(n)]
    za, xa = (z, rotated) if kind == "X" else (rotated, x)
    return ProtocolStrategy.build(
        n, _epr_pairs_matrix(n), {"A": za, "B": z}, {"A": xa, "B": x},
        {p: pairs for p in PLAYERS}, projective=True, name=f"perturbed{kind}({eta:g})",
    )


def lazy_strategy(n: int) -> ProtocolStrategy:
    """One shared EPR pair reused for every index; pair questions measured sequentially."""
    z = [SZ] * n
    x = [SX] * n
    pairs = _pair_families(n, lambda k, b: IDEAL_PAIR_OBSERVABLES[b])
    return ProtocolStrategy.build(
        n, _epr_pairs_matrix(1), {p: z for p in PLAYERS}, {p: x for p in PLAYERS},
        {p: pairs for p in PLAYERS}, projective=False, name="lazy",
    )


def trivial_strategy(n: int, dim: int = 1) -> ProtocolStrategy:
    """Every answer is +1: identity reflections and ``M_{1,1} = I``."""
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    fam = (eye, zero, zero, zero)
    pairs = {(i, j, b, c): fam for i, j in combinations(range(n), 2) for b in (0, 1) for c in (0, 1)}
    psi = np.eye(dim) / math.sqrt(dim)
    return ProtocolStrategy.build(
        n, psi, {p: [eye] * n for p in PLAYERS}, {p: [eye] * n for p in PLAYERS},
        {p: pairs for p in PLAYERS}, projective=True, name="trivial",
    )


def _random_projective_family(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    u = random_unitary(dim, rng)
    labels = rng.integers(4, size=dim)
    return tuple(u[:, labels == k] @ dagger(u[:, labels == k]) for k in range(4))


def _random_povm_family(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    # blocks of a random isometry C^dim -> C^(4 dim)
    v = random_unitary(4 * dim, rng)[:, :dim]
    return tuple(v[k * dim:(k + 1) * dim] for k in range(4))


def random_strategy(n: int, dims: tuple[int, int], rng: np.random.Generator,
                    projective: bool = True) -> ProtocolStrategy:
    """Random state, random reflections and random pair families."""
    psi = random_state(dims[0] * dims[1], rng).reshape(dims)
    make_family = _random_projective_family if projective else _random_povm_family
    z, x, pairs = {}, {}, {}
    for p, d in zip(PLAYERS, dims):
        z[p] = [random_reflection(d, rng) for _ in range(n)]
        x[p] = [random_reflection(d, rng) for _ in range(n)]
        pairs[p] = {
            (i, j, b, c): make_family(d, rng)
            for i, j in combinations(range(n), 2) for b in (0, 1) for c in (0, 1)
        }
    return ProtocolStrategy.build(n, psi, z, x, pairs, projective=projective, name="random")


# -- approximately commuting reflection families -------------------------------


class InvalidFamilyError(ValueError):
    pass


@dataclass(frozen=True)
class ReflectionFamily:
    """``n`` pairs ``(X_i, Z_i)`` of exactly anti-commuting reflections on ``C^dimension``.

    ``metric`` is the optimizer's own value when the family came from
    :func:`approx_commuting_family`; use :func:`validate_family` for a trusted one.
    """

    n: int
    dimension: int
    pairs: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)
    metric: float | None = None
    converged: bool = True

    def __post_init__(self):
        if len(self.pairs) != self.n:
            raise InvalidFamilyError(f"expected {self.n} pairs, got {len(self.pairs)}")
        for x, z in self.pairs:
            for r in (x, z):
                if r.shape != (self.dimension, self.dimension):
                    raise InvalidFamilyError("pair operator has the wrong dimension")
                if np.max(np.abs(r - dagger(r))) > ANTICOMMUTATION_TOL or \
                        np.max(np.abs(r @ r - np.eye(self.dimension))) > ANTICOMMUTATION_TOL:
                    raise InvalidFamilyError("family operators must be reflections")
            if operator_norm(anticommutator(x, z)) > ANTICOMMUTATION_TOL:
                raise InvalidFamilyError("X_i and Z_i must anti-commute")

    @classmethod
    def from_unitaries(cls, unitaries: Sequence[np.ndarray], metric=None, converged=True):
        d = unitaries[0].shape[0]
        sx = np.kron(SX, np.eye(d // 2))
        sz = np.kron(SZ, np.eye(d // 2))
        pairs = []
        for u in unitaries:
            x = u @ sx @ dagger(u)
            z = u @ sz @ dagger(u)
            pairs.append(((x + dagger(x)) / 2, (z + dagger(z)) / 2))
        return cls(len(pairs), d, tuple(pairs), metric, converged)

    def observable(self, i: int, name: str) -> np.ndarray:
        x, z = self.pairs[i]
        return x if name == "X" else z


def pauli_family(n: int) -> ReflectionFamily:
    """Exact n-qubit family ``(X_i, Z_i)`` on ``2**n`` dimensions."""
    pairs = tuple((embed_qubit(SX, k, n).astype(complex), embed_qubit(SZ, k, n).astype(complex))
                  for k in range(n))
    return ReflectionFamily(n, 2 ** n, pairs, 0.0)


@dataclass(frozen=True)
class FamilyMetrics:
    anticommutator_max: float
    commutator_metric: float
    # per (i, j, P, Q) with i < j
    commutators: dict = field(repr=False, default_factory=dict)


def validate_family(family: ReflectionFamily) -> FamilyMetrics:
    """Recompute anti-commutators and the cross-index commutator metric from scratch."""
    anti = max((operator_norm(anticommutator(x, z)) for x, z in family.pairs), default=0.0)
    comms = {}
    for i, j in combinations(range(family.n), 2):
        for p in "XZ":
            for q in "XZ":
                comms[i, j, p, q] = operator_norm(commutator(family.observable(i, p), family.observable(j, q)))
    return FamilyMetrics(anti, max(comms.values(), default=0.0), comms)


def _objective(ops, tau: float):
    """Smooth max of normalized squared Frobenius commutator norms, and Hermitian gradients."""
    n = len(ops)
    d = ops[0][0].shape[0]
    terms = []
    for i, j in combinations(range(n), 2):
        for a in (0, 1):
            for b in (0, 1):
                p, q = ops[i][a], ops[j][b]
                c = p @ q - q @ p
                terms.append((i, a, j, b, c, np.vdot(c, c).real / d))
    values = np.array([t[-1] for t in terms])
    top = values.max()
    w = np.exp((values - top) / tau)
    total = w.sum()
    value = top + tau * math.log(total)
    w /= total
    grads = [[np.zeros((d, d), dtype=complex) for _ in (0, 1)] for _ in range(n)]
    for wk, (i, a, j, b, c, _) in zip(w, terms):
        if wk < 1e-300:
            continue
        p, q = ops[i][a], ops[j][b]
        grads[i][a] += (2 * wk / d) * (c @ q - q @ c)
        grads[j][b] += (2 * wk / d) * (p @ c - c @ p)
    return value, grads


def _ops_from(unitaries, sx, sz):
    return [(u @ sx @ dagger(u), u @ sz @ dagger(u)) for u in unitaries]


def _measured_metric(unitaries) -> float:
    return validate_family(ReflectionFamily.from_unitaries(unitaries)).commutator_metric


def approx_commuting_family(n: int, dimension: int, eps_target: float, seed: int,
                            restarts: int = 6, max_iter: int = 1500, tau: float = 0.01) -> ReflectionFamily:
    """Search for ``n`` anti-commuting pairs on ``C^dimension`` with small cross commutators.

    Each pair is ``U_i (X (x) I) U_i^dag, U_i (Z (x) I) U_i^dag``.  The unitaries are
    found by Riemannian gradient descent with Armijo backtracking on the smooth
    max of squared commutator norms, restarted from random points.  The
    returned ``metric`` is the operator-norm commutator metric of the best
    restart; ``converged`` says whether it reached ``eps_target``.
    """
    if dimension < 2 or dimension % 2:
        raise ValueError("dimension must be even and at least 2")
    if n < 1:
        raise ValueError("n must be positive")
    sx = np.kron(SX, np.eye(dimension // 2))
    sz = np.kron(SZ, np.eye(dimension // 2))
    if n == 1:
        return ReflectionFamily.from_unitaries([np.eye(dimension, dtype=complex)], 0.0, True)
    rng = np.random.default_rng(seed)
    best_u, best_metric = None, math.inf
    for _ in range(restarts):
        us = [random_unitary(dimension, rng) for _ in range(n)]
        value, grads = _objective(_ops_from(us, sx, sz), tau)
        lr = 0.5
        for _ in range(max_iter):
            ops = _ops_from(us, sx, sz)
            # skew-Hermitian Riemannian gradient per unitary
            omegas = [sum(g @ p - p @ g for g, p in zip(grads[i], ops[i])) for i in range(n)]
            gnorm2 = sum(np.vdot(o, o).real for o in omegas)
            if gnorm2 < 1e-26:
                break
            while True:
                trial = [expm(-lr * o) @ u for o, u in zip(omegas, us)]
                t_value, t_grads = _objective(_ops_from(trial, sx, sz), tau)
                if t_value <= value - 1e-4 * lr * gnorm2 or lr < 1e-12:
                    break
                lr /= 2
            if t_value >= value:
                break
            us, value, grads = trial, t_value, t_grads
            lr = min(lr * 2, 10.0)
        metric = _measured_metric(us)
        if metric < best_metric:
            best_u, best_metric = us, metric
        if best_metric <= eps_target:
            break
    return ReflectionFamily.from_unitaries(best_u, best_metric, best_metric <= eps_target)


def attack_strategy(family: ReflectionFamily) -> ProtocolStrategy:
    """Low-dimensional strategy built from an approximately commuting family.

    The players share a maximally entangled state of the family's dimension.
    Alice uses the family operators and Bob their complex conjugates, which
    makes every single-index correlation exactly 1.  Pair questions are
    answered by measuring ``(X_i + Z_i)/sqrt2`` (bit 0) or ``(Z_i - X_i)/sqrt2``
    (bit 1), lower index first.
    """
    metrics = validate_family(family)
    if metrics.anticommutator_max > ANTICOMMUTATION_TOL:
        raise InvalidFamilyError("family pairs do not anti-commute")
    n, d = family.n, family.dimension
    if n < 2:
        raise InvalidFamilyError("the protocol needs n >= 2")
    z, x, pairs = {}, {}, {}
    for p, conj in (("A", False), ("B", True)):
        fix = np.conj if conj else (lambda m: m)
        z[p] = [fix(zz) for _, zz in family.pairs]
        x[p] = [fix(xx) for xx, _ in family.pairs]
        obs = [[(x[p][k] + z[p][k]) / math.sqrt(2), (z[p][k] - x[p][k]) / math.sqrt(2)] for k in range(n)]
        pairs[p] = _pair_families(n, lambda k, b, obs=obs: obs[k][b])
    psi = np.eye(d, dtype=complex) / math.sqrt(d)
    return ProtocolStrategy.build(n, psi, z, x, pairs, projective=False, name="attack")


# -- serialization -------------------------------------------------------------


def _matrix_to_json(m) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def family_to_dict(family: ReflectionFamily) -> dict:
    return {
        "n": family.n,
        "dimension": family.dimension,
        "pairs": [{"X": _matrix_to_json(x), "Z": _matrix_to_json(z)} for x, z in family.pairs],
    }


def family_from_dict(data: dict) -> ReflectionFamily:
    pairs = tuple((_matrix_from_json(p["X"]), _matrix_from_json(p["Z"])) for p in data["pairs"])
    return ReflectionFamily(int(data["n"]), int(data["dimension"]), pairs)


def dump_family(family: ReflectionFamily) -> str:
    return json.dumps(family_to_dict(family))


def load_family(text: str) -> ReflectionFamily:
    return family_from_dict(json.loads(text))

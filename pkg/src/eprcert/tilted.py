"""Tilted Bell inequality, partially entangled states and the controlled-swap machinery.

Naming: ``TiltedParams.theta`` is the angle with ``tan(theta) = sqrt((4 - a^2) / (2 a^2))``.
The state maximizing ``B_alpha`` with ``A_0 = Z``, ``A_1 = X`` is
``psi_s = cos(s)|00> + sin(s)|11>`` for the Schmidt angle ``s = theta / 2``.
Every function below that takes a state angle expects the Schmidt angle of
the state actually in use.

Self-testing labels: ``Z_A = A_0`` and ``X_A = A_1``; Bob's derived observables
are ``Z_B = sign(B_0 + B_1)`` and ``X_B = sign(B_0 - B_1)``.

Extended side spaces are ``H_D (x) D'_1..D'_2n (x) D''_1..D''_n`` (ancilla
qubits ``0 .. 3n-1``): pair ``k`` of internal states on qubits ``(2k, 2k+1)``
and the controlled-swap ancilla ``D''_j`` on qubit ``2n + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .qlin import (
    HAD,
    I2,
    SX,
    SY,
    SZ,
    StateVector,
    anticommutator,
    bipartite_layout,
    check_reflection,
    commutator,
    dagger,
    matrix_sign,
    operator_norm,
    random_reflection,
    random_state,
)
from .rigidity import (
    PauliPair,
    CrossOperator,
    distance_to_target,
    qubit_factorization,
    side_apply,
    structural_residuals,
)

PLAYERS = ("A", "B")
SAFE_THETA = (0.05, math.pi / 2 - 0.05)
MAX_TILTED_N = 2
MAX_JOINT_AMPLITUDES = 2 ** 18
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


class TiltedBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class TiltedParams:
    alpha: float
    theta: float

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must lie in (0, pi/2)")

    @classmethod
    def from_alpha(cls, alpha: float) -> "TiltedParams":
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        return cls(alpha, math.atan(math.sqrt((4 - alpha ** 2) / (2 * alpha ** 2))))

    @property
    def schmidt_angle(self) -> float:
        """Angle of the state achieving the optimal violation."""
        return self.theta / 2

    @property
    def optimum(self) -> float:
        return math.sqrt(8 + 2 * self.alpha ** 2)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "theta": self.theta, "schmidt_angle": self.schmidt_angle,
                "optimum": self.optimum}


def psi_theta(theta: float) -> StateVector:
    v = np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)
    return StateVector(bipartite_layout(2, 2), v)


def psi_theta_matrix(theta: float) -> np.ndarray:
    return np.diag([math.cos(theta), math.sin(theta)]).astype(complex)


def blowup_factor(theta: float) -> float:
    return math.tan(theta) + 1 / math.tan(theta)


@dataclass(frozen=True)
class TiltedStrategy:
    """State matrix plus ``(A_0, A_1)`` for Alice and ``(B_0, B_1)`` for Bob."""

    psi: np.ndarray = field(repr=False)
    a: tuple[np.ndarray, np.ndarray] = field(repr=False)
    b: tuple[np.ndarray, np.ndarray] = field(repr=False)
    require_balanced: bool = True

    def __post_init__(self):
        for ops in (self.a, self.b):
            for r in ops:
                check_reflection(r)
                if self.require_balanced and abs(np.trace(r).real) > 1e-8:
                    raise ValueError("tilted strategy observables must be balanced reflections")

    @property
    def schmidt_coefficients(self) -> np.ndarray:
        return np.linalg.svd(self.psi, compute_uv=False)


def bell_value(strategy: TiltedStrategy, alpha: float) -> float:
    """``<psi| alpha A0 + A0 (B0 + B1) + A1 (B0 - B1) |psi>``."""
    psi = strategy.psi
    a0, a1 = strategy.a
    b0, b1 = strategy.b

    def corr(x, y):
        return np.vdot(psi, x @ psi @ y.T).real

    eye_b = np.eye(psi.shape[1])
    return float(alpha * corr(a0, eye_b) + corr(a0, b0 + b1) + corr(a1, b0 - b1))


def bell_operator(alpha: float, a, b) -> np.ndarray:
    a0, a1 = a
    b0, b1 = b
    eye_b = np.eye(b0.shape[0])
    return alpha * np.kron(a0, eye_b) + np.kron(a0, b0 + b1) + np.kron(a1, b0 - b1)


def _top_state(alpha, a, b, dims) -> np.ndarray:
    w, v = np.linalg.eigh(bell_operator(alpha, a, b))
    return v[:, -1].reshape(dims)


def _bob_update(psi, a):
    a0, a1 = a
    m = lambda op: (dagger(psi) @ op @ psi).T  # noqa: E731
    return matrix_sign(m(a0 + a1)), matrix_sign(m(a0 - a1))


def _alice_update(psi, b, alpha):
    b0, b1 = b
    n = lambda op: psi @ op.T @ dagger(psi)  # noqa: E731
    return matrix_sign(alpha * n(np.eye(b0.shape[0])) + n(b0 + b1)), matrix_sign(n(b0 - b1))


@dataclass(frozen=True)
class SeesawResult:
    value: float
    psi: np.ndarray = field(repr=False)
    a: tuple = field(repr=False)
    b: tuple = field(repr=False)
    iterations: int = 0


def seesaw(alpha: float, dims: tuple[int, int], seed: int, fix_alice=None,
           max_iter: int = 2000, stall: float = 1e-12) -> SeesawResult:
    """Alternate between the top eigenvector of ``B_alpha`` and sign updates of the observables."""
    rng = np.random.default_rng(seed)
    a = tuple(fix_alice) if fix_alice is not None else (
        random_reflection(dims[0], rng), random_reflection(dims[0], rng))
    b = (random_reflection(dims[1], rng), random_reflection(dims[1], rng))
    psi = random_state(dims[0] * dims[1], rng).reshape(dims)
    value = -math.inf
    it = 0
    for it in range(1, max_iter + 1):
        psi = _top_state(alpha, a, b, dims)
        b = _bob_update(psi, a)
        if fix_alice is None:
            a = _alice_update(psi, b, alpha)
        new = bell_value(TiltedStrategy(psi, a, b, require_balanced=False), alpha)
        if abs(new - value) <= stall:
            value = new
            break
        value = new
    return SeesawResult(value, psi, a, b, it)


def optimal_tilted_strategy(alpha: float, seed: int = 0) -> TiltedStrategy:
    """Optimal strategy with ``A_0 = Z``, ``A_1 = X`` on ``psi_s`` in the computational basis.

    The see-saw finds the optimum; its Schmidt angle fixes the canonical state
    and one exact sign step recomputes Bob's observables for it.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    a = (SZ.astype(complex), SX.astype(complex))
    res = seesaw(alpha, (2, 2), seed, fix_alice=a)
    coeffs = np.linalg.svd(res.psi, compute_uv=False)
    s = math.atan2(coeffs[1], coeffs[0])
    psi = psi_theta_matrix(s)
    b = _bob_update(psi, a)
    return TiltedStrategy(psi, a, b)


def schmidt_angle(strategy: TiltedStrategy) -> float:
    c = strategy.schmidt_coefficients
    return math.atan2(c[1], c[0])


def self_test_observables(strategy: TiltedStrategy) -> dict[str, PauliPair]:
    """``(X_D, Z_D)`` per player: ``Z_A = A0``, ``X_A = A1``, ``Z_B = sign(B0+B1)``, ``X_B = sign(B0-B1)``."""
    a0, a1 = strategy.a
    b0, b1 = strategy.b
    return {"A": (a1, a0), "B": (matrix_sign(b0 - b1), matrix_sign(b0 + b1))}


def game_win_probability(value: float, alpha: float) -> float:
    """Affine map of ``B_alpha`` onto ``[0, 1]``; at ``alpha = 0`` it is the CHSH win probability."""
    return 0.5 + value / (2 * (4 + alpha))


# -- condition residuals --------------------------------------------------------------


@dataclass(frozen=True)
class ConditionResiduals:
    anticommutation: dict  # (side, j)
    zz_stabilizer: dict  # j
    cross_relation: dict  # (side, j), side is D in the relation
    commutators: dict  # (side, i, j, P, Q)

    @property
    def per_condition(self) -> dict:
        return {k: max(v.values(), default=0.0) for k, v in (
            ("anticommutation", self.anticommutation), ("zz_stabilizer", self.zz_stabilizer),
            ("cross_relation", self.cross_relation), ("commutators", self.commutators))}

    @property
    def max(self) -> float:
        return max(self.per_condition.values())

    def to_dict(self) -> dict:
        return {"max": self.max, **self.per_condition}


def cross_relation(x_d, z_d, x_o, z_o, psi, theta: float, side: str) -> float:
    """``||sin(t) X_D (I + Z_D') psi - cos(t) (I - Z_D) X_D' psi||``."""
    other = "B" if side == "A" else "A"

    def on(op, vec, s):
        return side_apply(op, vec, s)

    lhs = on(x_d, psi + on(z_o, psi, other), side)
    xo = on(x_o, psi, other)
    rhs = xo - on(z_d, xo, side)
    return float(np.linalg.norm(math.sin(theta) * lhs - math.cos(theta) * rhs))


def tilted_conditions_residuals(ops: dict[str, Sequence[PauliPair]], psi, theta: float) -> ConditionResiduals:
    psi = np.asarray(psi, dtype=complex)
    n = len(ops["A"])
    anti = {(s, j): operator_norm(anticommutator(*ops[s][j])) for s in PLAYERS for j in range(n)}
    zz = {j: float(np.linalg.norm(ops["A"][j][1] @ psi @ ops["B"][j][1].T - psi)) for j in range(n)}
    cross = {}
    for s in PLAYERS:
        o = "B" if s == "A" else "A"
        for j in range(n):
            cross[s, j] = cross_relation(ops[s][j][0], ops[s][j][1], ops[o][j][0], ops[o][j][1], psi, theta, s)
    comms = {}
    for s in PLAYERS:
        for i, j in permutations(range(n), 2):
            for a, p in zip("XZ", ops[s][i]):
                for b, q in zip("XZ", ops[s][j]):
                    comms[s, i, j, a, b] = float(np.linalg.norm(side_apply(commutator(p, q), psi, s)))
    return ConditionResiduals(anti, zz, cross, comms)


def tilted_honest(n: int, theta: float):
    """``psi_theta^n`` between qubit k of each side, with Pauli ``(X_k, Z_k)`` on both sides."""
    psi = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        psi = np.kron(psi, psi_theta_matrix(theta))
    pairs = []
    for k in range(n):
        emb = lambda op: np.kron(np.kron(np.eye(2 ** k), op), np.eye(2 ** (n - k - 1))).astype(complex)  # noqa: E731
        pairs.append((emb(SX), emb(SZ)))
    return psi, {s: list(pairs) for s in PLAYERS}


# -- controlled swaps -------------------------------------------------------------------


def _on_side(op_d, anc: dict, d: int, n_anc: int) -> np.ndarray:
    """``op_d`` on the player's space times single-qubit ancilla operators."""
    out = np.asarray(op_d, dtype=complex) if op_d is not None else np.eye(d, dtype=complex)
    rest = np.ones((1, 1), dtype=complex)
    for q in range(n_anc):
        rest = np.kron(rest, anc.get(q, I2))
    return np.kron(out, rest)


def u_j_operator(pair: PauliPair, j: int, n: int, literal: bool = False) -> np.ndarray:
    """Controlled swap of the qubit ``(X_j, Z_j)`` into ancilla ``D''_j``.

    Circuit order: Hadamard on the ancilla, controlled-``Z_j``, Hadamard,
    controlled-``X_j``.  ``literal=True`` multiplies the same factors in the
    opposite order, which copies rather than swaps; it is kept for comparison.
    """
    x, z = pair
    d = x.shape[0]
    n_anc = 3 * n
    q = 2 * n + j
    h = _on_side(None, {q: HAD}, d, n_anc)
    cz = _on_side(None, {q: P0}, d, n_anc) + _on_side(z, {q: P1}, d, n_anc)
    cx = _on_side(None, {q: P0}, d, n_anc) + _on_side(x, {q: P1}, d, n_anc)
    if literal:
        return h @ cz @ h @ cx
    return cx @ h @ cz @ h


def _swap_pair(q1: int, q2: int, d: int, n_anc: int) -> np.ndarray:
    return sum(_on_side(None, {q1: s, q2: s}, d, n_anc) for s in (I2, SX, SY, SZ)) / 2


def tilted_swap(u: np.ndarray, j: int, n: int, d: int) -> np.ndarray:
    """``S_j = U_j^dag SWAP(D''_j, D'_{2j}) U_j`` (ancilla qubits ``2n + j`` and ``2j``)."""
    s = _swap_pair(2 * n + j, 2 * j, d, 3 * n)
    return dagger(u) @ s @ u


def tilted_cross_swap(u_other: np.ndarray, j: int, n: int, own_dim: int, side: str) -> CrossOperator:
    """``S'_j``: the other player's ``U_j^dag SWAP(D''_j, own ancilla 2j+1) U_j``."""
    n_anc = 3 * n
    other_dim = u_other.shape[0] // 2 ** n_anc
    terms = []
    for sig in (I2, SX, SY, SZ):
        own = _on_side(None, {2 * j + 1: sig}, own_dim, n_anc) / 2
        oth = dagger(u_other) @ _on_side(None, {2 * n + j: sig}, other_dim, n_anc) @ u_other
        terms.append((own, oth) if side == "A" else (oth, own))
    return CrossOperator(tuple(terms))


def tilted_extended_state(psi, n: int, theta: float) -> np.ndarray:
    """``psi (x) psi_theta^n_{A'} (x) psi_theta^n_{B'} (x) |00>^n_{A''B''}``."""
    pair = np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)
    e = np.ones(1, dtype=complex)
    for _ in range(n):
        e = np.kron(e, pair)
    for _ in range(n):
        e = np.kron(e, np.array([1, 0], dtype=complex))
    return np.kron(np.asarray(psi, dtype=complex), np.outer(e, e))


def _lift(op, n: int) -> np.ndarray:
    return np.kron(op, np.eye(2 ** (3 * n)))


def upst_residual(u_a, u_b, psi_prime, j: int, n: int, dims, theta: float) -> float:
    """Distance from ``(U_j (x) U_j) psi'`` to ``psi_theta`` on ``A''_j B''_j`` times junk on ``AB``.

    The internal states and the other ``D''`` qubits keep their initial values;
    the junk state is optimized out.
    """
    phi = u_a @ psi_prime @ u_b.T
    da, db = dims
    phi = phi.reshape(da, 4 ** n, 2 ** n, db, 4 ** n, 2 ** n)
    pair = np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)
    internal = np.ones(1, dtype=complex)
    for _ in range(n):
        internal = np.kron(internal, pair)
    # D'' registers: psi_theta on (j, j), |0> elsewhere
    dd = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for a in (0, 1):
        idx = a << (n - 1 - j)
        dd[idx, idx] = (math.cos(theta), math.sin(theta))[a]
    target = np.einsum("p,q,rs->pqrs", internal, internal, dd)  # (A', B', A'', B'')
    v = np.einsum("pqrs,ipr jqs->ij".replace(" ", ""), target.conj(), phi)
    nv = np.linalg.norm(v)
    if nv == 0:
        return math.sqrt(2.0)
    junk = v / nv
    ideal = np.einsum("pqrs,ij->iprjqs", target, junk)
    return float(np.linalg.norm(phi - ideal))


@dataclass(frozen=True)
class TiltedPipelineReport:
    theta: float
    conditions: ConditionResiduals
    upst: dict  # j -> tilted-pair placement residual
    primed_closeness: dict  # (side, j, P) -> ||(P_j - P'_j) psi'||
    swap_switch: dict  # (side, i)
    swap_commutators: dict  # (side, i, j, P)
    exact_primed_closeness: dict  # (side, j, P) -> ||(P''_j - P_j) psi'||
    exact_primed_commutator_max: float
    exact_primed_anticommutator_max: float
    primed_conditions: ConditionResiduals
    distance: float

    @property
    def swap_residual_max(self) -> float:
        return max([*self.swap_switch.values(), *self.swap_commutators.values()], default=0.0)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "conditions": self.conditions.to_dict(),
            "upst_max": max(self.upst.values()),
            "primed_closeness_max": max(self.primed_closeness.values()),
            "swap_switch_max": max(self.swap_switch.values()),
            "swap_commutator_max": max(self.swap_commutators.values(), default=0.0),
            "exact_primed_closeness_max": max(self.exact_primed_closeness.values()),
            "exact_primed_commutator_max": self.exact_primed_commutator_max,
            "exact_primed_anticommutator_max": self.exact_primed_anticommutator_max,
            "primed_conditions": self.primed_conditions.to_dict(),
            "distance": self.distance,
        }


def check_tilted_budget(n: int, dims) -> None:
    if n > MAX_TILTED_N:
        raise TiltedBudgetError(f"tilted extended-state analysis is limited to n <= {MAX_TILTED_N}")
    total = dims[0] * dims[1] * 2 ** (6 * n)
    if total > MAX_JOINT_AMPLITUDES:
        raise TiltedBudgetError(f"tilted extended state would hold {total} amplitudes "
                                f"(limit {MAX_JOINT_AMPLITUDES})")


def tilted_target(n: int, theta: float) -> np.ndarray:
    t = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        t = np.kron(t, psi_theta_matrix(theta))
    return t


def tilted_pipeline(psi, ops: dict[str, Sequence[PauliPair]], theta: float) -> TiltedPipelineReport:
    """Controlled swaps, primed operators, factorization and distance to ``psi_theta^n``."""
    psi = np.asarray(psi, dtype=complex)
    n = len(ops["A"])
    dims = psi.shape
    check_tilted_budget(n, dims)
    conditions = tilted_conditions_residuals(ops, psi, theta)
    psi_p = tilted_extended_state(psi, n, theta)
    us = {s: [u_j_operator(ops[s][j], j, n) for j in range(n)] for s in PLAYERS}
    d = dict(zip(PLAYERS, dims))
    lifted = {s: [tuple(_lift(p, n) for p in pair) for pair in ops[s]] for s in PLAYERS}
    primed = {}
    for s in PLAYERS:
        primed[s] = []
        for j in range(n):
            pp = []
            for sig in (SX, SZ):
                m = dagger(us[s][j]) @ _on_side(None, {2 * n + j: sig}, d[s], 3 * n) @ us[s][j]
                pp.append((m + dagger(m)) / 2)
            primed[s].append(tuple(pp))

    upst = {j: upst_residual(us["A"][j], us["B"][j], psi_p, j, n, dims, theta) for j in range(n)}
    closeness = {(s, j, name): float(np.linalg.norm(side_apply(primed[s][j][k] - lifted[s][j][k], psi_p, s)))
                 for s in PLAYERS for j in range(n) for k, name in enumerate("XZ")}
    swaps = {s: [tilted_swap(us[s][j], j, n, d[s]) for j in range(n)] for s in PLAYERS}
    switch, swap_comm = {}, {}
    for s in PLAYERS:
        o = "B" if s == "A" else "A"
        for i in range(n):
            cross = tilted_cross_swap(us[o][i], i, n, d[s], s)
            switch[s, i] = float(np.linalg.norm(side_apply(swaps[s][i], psi_p, s) - cross.apply(psi_p)))
        for i, j in permutations(range(n), 2):
            for k, name in enumerate("XZ"):
                p = primed[s][j][k]
                val = side_apply(swaps[s][i], side_apply(p, psi_p, s), s) - \
                    side_apply(p, side_apply(swaps[s][i], psi_p, s), s)
                swap_comm[s, i, j, name] = float(np.linalg.norm(val))

    # exactly commuting P''_j = S_1..S_{j-1} P'_j S_{j-1}..S_1
    exact = {}
    for s in PLAYERS:
        prefix = np.eye(swaps[s][0].shape[0], dtype=complex)
        exact[s] = []
        for j in range(n):
            pair = []
            for p in primed[s][j]:
                m = prefix @ p @ dagger(prefix)
                pair.append((m + dagger(m)) / 2)
            exact[s].append(tuple(pair))
            prefix = prefix @ swaps[s][j]
    exact_close = {(s, j, name): float(np.linalg.norm(side_apply(exact[s][j][k] - lifted[s][j][k], psi_p, s)))
                   for s in PLAYERS for j in range(n) for k, name in enumerate("XZ")}
    comm, anti = 0.0, 0.0
    for s in PLAYERS:
        c, a = structural_residuals(exact[s])
        comm, anti = max(comm, c), max(anti, a)
    primed_cond = tilted_conditions_residuals(exact, psi_p, theta)
    factors = {s: qubit_factorization(exact[s]) for s in PLAYERS}
    distance, _ = distance_to_target(factors["A"], factors["B"], psi_p, n, tilted_target(n, theta))
    return TiltedPipelineReport(theta, conditions, upst, closeness, switch, swap_comm,
                                exact_close, comm, anti, primed_cond, distance)


# -- hat operators ------------------------------------------------------------------------

HAT_VARIANTS = ((-1, "I-Z"), (-1, "I+Z"), (1, "I-Z"), (1, "I+Z"))
PRINTED_HAT_VARIANT = (-1, "I-Z")
RESOLVED_HAT_VARIANT = (1, "I+Z")


def hat_operators(x, z, theta: float, variant=RESOLVED_HAT_VARIANT):
    """``(X_hat, Z_hat)`` with ``X_hat = c/(2s) X (I - Z) + sign * s/(2c) X (I -+ Z)``."""
    sign, proj = variant
    if proj not in ("I-Z", "I+Z"):
        raise ValueError(f"unknown projector {proj!r}")
    c, s = math.cos(theta), math.sin(theta)
    eye = np.eye(x.shape[0])
    second = eye - z if proj == "I-Z" else eye + z
    xhat = c / (2 * s) * x @ (eye - z) + sign * s / (2 * c) * x @ second
    return xhat, z


@dataclass(frozen=True)
class HatResiduals:
    variant: tuple
    consistency: dict  # (T, direction) -> residual
    anticommutators: dict  # side -> ||{X, Z}_D psi||
    norm: float
    blowup: float
    singular: bool

    @property
    def max(self) -> float:
        return max([*self.consistency.values(), *self.anticommutators.values()])

    def to_dict(self) -> dict:
        return {"variant": variant_label(self.variant),
                "max": self.max, "norm": self.norm, "blowup": self.blowup, "singular": self.singular}


def variant_label(variant) -> str:
    """``"+(I+Z)"`` style name of a sign/projector variant."""
    return f"{'+' if variant[0] > 0 else '-'}({variant[1]})"


def hat_residuals(ops: dict[str, PauliPair], psi, theta: float, variant=RESOLVED_HAT_VARIANT) -> HatResiduals:
    """Cross-consistency ``||(T_A - T_hat_B) psi||``, ``||(T_B - T_hat_A) psi||`` and anti-commutators."""
    psi = np.asarray(psi, dtype=complex)
    hats = {s: hat_operators(*ops[s], theta, variant) for s in PLAYERS}
    cons = {}
    for k, t in enumerate("XZ"):
        cons[t, "A"] = float(np.linalg.norm(ops["A"][k] @ psi - psi @ hats["B"][k].T))
        cons[t, "B"] = float(np.linalg.norm(psi @ ops["B"][k].T - hats["A"][k] @ psi))
    anti = {s: float(np.linalg.norm(side_apply(anticommutator(*ops[s]), psi, s))) for s in PLAYERS}
    norm = max(operator_norm(hats[s][0]) for s in PLAYERS)
    singular = not SAFE_THETA[0] <= theta <= SAFE_THETA[1]
    return HatResiduals(tuple(variant), cons, anti, norm, blowup_factor(theta), singular)


def resolve_hat_variant(ops: dict[str, PauliPair], psi, theta: float, tol: float = 1e-8):
    """Evaluate all four sign/projector variants; return ``(selected, residuals by variant)``."""
    results = {v: hat_residuals(ops, psi, theta, v) for v in HAT_VARIANTS}
    selected = [v for v, r in results.items() if r.max <= tol]
    return selected, results


# -- agreement with the maximally entangled machinery -------------------------------------


def _ancilla_zero_embedding(d: int, n: int) -> np.ndarray:
    """Isometry from ``H_D (x) D'`` into ``H_D (x) D' (x) D''`` with every ``D''`` qubit in ``|0>``."""
    zero = np.zeros((2 ** n, 1))
    zero[0, 0] = 1
    return np.kron(np.eye(d * 4 ** n), zero).astype(complex)


def chsh_consistency(psi, ops: dict[str, Sequence[PauliPair]]) -> dict[str, float]:
    """Absolute differences between the tilted machinery at ``theta = pi/4`` and the swap machinery.

    Requires exactly anti-commuting pairs.  Compares swap operators restricted
    to ``D'' = |0>``, the exactly commuting primed operators, every swap
    residual and the final distance.
    """
    from .rigidity import factorize, primed_operators, swap_analysis, swap_operator

    psi = np.asarray(psi, dtype=complex)
    n = len(ops["A"])
    theta = math.pi / 4
    tilted = tilted_pipeline(psi, ops, theta)
    report, psi_p, primed = swap_analysis(psi, ops)
    fact = factorize(psi_p, primed, ops, n)
    out = {}

    def gap(a: dict, b: dict) -> float:
        return max(abs(a[k] - b[k]) for k in a)

    out["swap_switch"] = gap(tilted.swap_switch, report.swap_switch)
    out["swap_commutators"] = gap(tilted.swap_commutators, report.swap_commutators) if n > 1 else 0.0
    out["primed_closeness"] = gap(tilted.exact_primed_closeness, report.primed_closeness)
    out["distance"] = abs(tilted.distance - fact.distance)
    psi_t = tilted_extended_state(psi, n, theta)
    out["extended_state"] = float(np.linalg.norm(
        psi_t - _ancilla_zero_embedding(psi.shape[0], n) @ psi_p @ _ancilla_zero_embedding(psi.shape[1], n).T))
    op_gap = 0.0
    for s, d in zip(PLAYERS, psi.shape):
        j_iso = _ancilla_zero_embedding(d, n)
        swaps_c = [swap_operator(j, ops[s], n) for j in range(n)]
        swaps_t = [tilted_swap(u_j_operator(ops[s][j], j, n), j, n, d) for j in range(n)]
        for sc, st in zip(swaps_c, swaps_t):
            op_gap = max(op_gap, operator_norm(st @ j_iso - j_iso @ sc))
        primed_c = primed_operators(ops[s], n, swaps_c)
        prefix = np.eye(j_iso.shape[0], dtype=complex)
        for j in range(n):
            u = u_j_operator(ops[s][j], j, n)
            for k, sig in enumerate((SX, SZ)):
                p = dagger(u) @ _on_side(None, {2 * n + j: sig}, d, 3 * n) @ u
                pt = prefix @ p @ dagger(prefix)
                op_gap = max(op_gap, operator_norm(pt @ j_iso - j_iso @ primed_c[j][k]))
            prefix = prefix @ swaps_t[j]
    out["operators"] = op_gap
    return out

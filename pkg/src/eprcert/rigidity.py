"""Soundness quantities, swap isometries, qubit factorization and distance to n EPR pairs.

Extended states are amplitude matrices over ``(side A) x (side B)`` where each
side is ``H_D (x) (C^2)^{(x) 2n}``: the player's space followed by ``2n``
ancilla qubits holding ``n`` internal EPR pairs on qubits ``(2k, 2k+1)``.
Index ``j`` is 0-based, so the swap ``S_j`` uses ancilla qubit ``2j`` and the
cross swap ``S'_j`` uses ancilla qubit ``2j + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Sequence

import numpy as np

from .chsh import _qubit_frame, rounded_x
from .protocol import (
    OMEGA_OPT,
    PLAYERS,
    ProtocolStrategy,
    dilate_strategy,
    exact_acceptance,
    marginal_observable,
    pad_strategy_to_balanced,
)
from .qlin import I2, SX, SY, SZ, anticommutator, commutator, dagger, epr_pairs_vector, operator_norm

MAX_RIGIDITY_N = 3
MAX_JOINT_AMPLITUDES = 2 ** 18
EXACT_TOL = 1e-10
FACTORIZATION_TOL = 1e-8

PauliPair = tuple[np.ndarray, np.ndarray]  # (X, Z)


class BudgetError(RuntimeError):
    """The extended-state stage would exceed the dense memory budget."""


class NonAnticommutingError(ValueError):
    pass


class CommutationError(ValueError):
    pass


class NonProjectiveError(ValueError):
    pass


def side_apply(op, psi: np.ndarray, side: str) -> np.ndarray:
    return op @ psi if side == "A" else psi @ op.T


def pauli_of(pair: PauliPair, name: str) -> np.ndarray:
    return pair[0] if name == "X" else pair[1]


# -- soundness quantities --------------------------------------------------------


@dataclass(frozen=True)
class SoundnessReport:
    """Residuals of the soundness conclusions, keyed by player and indices.

    ``stabilizer_residuals`` use ``P in {Xbar, Z}``; ``raw_stabilizer_residuals``
    use the measured ``P in {X, Z}`` and obey ``<= 2 sqrt(3 n delta)``.
    ``hadamard_residuals[(pair player, i, j, b, c)]`` is
    ``||((Z_i + (-1)^b Xbar_i)/sqrt2 (x) R^{jc}_{ib}) psi - psi||``.
    """

    n: int
    delta: float
    acceptance: float
    xbar_residuals: dict
    stabilizer_residuals: dict
    raw_stabilizer_residuals: dict
    commutator_residuals: dict
    hadamard_residuals: dict
    measurement_commutators: float
    epsilon: float
    xbar: dict = field(repr=False)
    psi: np.ndarray = field(repr=False)
    z: dict = field(repr=False)

    @property
    def swap_input_epsilon(self) -> float:
        """Largest commutator or stabilizer residual, the input scale of the swap construction."""
        vals = list(self.commutator_residuals.values()) + list(self.stabilizer_residuals.values())
        return max(vals, default=0.0)

    def pairs(self, player: str) -> list[PauliPair]:
        return [(self.xbar[player][i], self.z[player][i]) for i in range(self.n)]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "acceptance": self.acceptance,
            "epsilon": self.epsilon,
            "swap_input_epsilon": self.swap_input_epsilon,
            "measurement_commutators": self.measurement_commutators,
            "xbar_residuals": [{"player": p, "i": i, "value": v}
                               for (p, i), v in sorted(self.xbar_residuals.items())],
            "stabilizer_residuals": [{"i": i, "P": q, "value": v}
                                     for (i, q), v in sorted(self.stabilizer_residuals.items())],
            "raw_stabilizer_residuals": [{"i": i, "P": q, "value": v}
                                         for (i, q), v in sorted(self.raw_stabilizer_residuals.items())],
            "commutator_residuals": [{"player": p, "i": i, "j": j, "P": a, "Q": b, "value": v}
                                     for (p, i, j, a, b), v in sorted(self.commutator_residuals.items())],
            "hadamard_residuals": [{"pair_player": p, "i": i, "j": j, "b": b, "c": c, "value": v}
                                   for (p, i, j, b, c), v in sorted(self.hadamard_residuals.items())],
        }


def prepare_strategy(strategy: ProtocolStrategy) -> ProtocolStrategy:
    """Projective, balanced version of ``strategy`` with identical statistics."""
    return pad_strategy_to_balanced(dilate_strategy(strategy))


def soundness_quantities(strategy: ProtocolStrategy) -> SoundnessReport:
    if not strategy.projective:
        raise NonProjectiveError("strategy is not projective; apply dilate_strategy first")
    n = strategy.n
    psi = strategy.psi
    acceptance = exact_acceptance(strategy)
    delta = OMEGA_OPT - acceptance

    meas_comm = 0.0
    for p in PLAYERS:
        for i, j in permutations(range(n), 2):
            for b in (0, 1):
                for c in (0, 1):
                    r1 = marginal_observable(strategy, p, i, b, j, c)
                    r2 = marginal_observable(strategy, p, j, c, i, b)
                    meas_comm = max(meas_comm, operator_norm(commutator(r1, r2)))

    xbar = {p: [rounded_x(strategy.z[p][i], strategy.x[p][i]) for i in range(n)] for p in PLAYERS}
    xbar_res = {
        (p, i): float(np.linalg.norm(side_apply(strategy.x[p][i] - xbar[p][i], psi, p)))
        for p in PLAYERS for i in range(n)
    }
    ops = {p: {"X": xbar[p], "Z": list(strategy.z[p])} for p in PLAYERS}
    raw = {p: {"X": list(strategy.x[p]), "Z": list(strategy.z[p])} for p in PLAYERS}

    def stab(table, i, q):
        return float(np.linalg.norm(table["A"][q][i] @ psi @ table["B"][q][i].T - psi))

    stabilizers = {(i, q): stab(ops, i, q) for i in range(n) for q in "XZ"}
    raw_stabilizers = {(i, q): stab(raw, i, q) for i in range(n) for q in "XZ"}

    comms = {}
    for p in PLAYERS:
        for i, j in permutations(range(n), 2):
            for a in "XZ":
                for b in "XZ":
                    c = commutator(ops[p][a][i], ops[p][b][j])
                    comms[p, i, j, a, b] = float(np.linalg.norm(side_apply(c, psi, p)))

    hadamard = {}
    for pair_player in PLAYERS:
        single = "B" if pair_player == "A" else "A"
        for i, j in permutations(range(n), 2):
            for b in (0, 1):
                ideal = (ops[single]["Z"][i] + (-1) ** b * ops[single]["X"][i]) / math.sqrt(2)
                for c in (0, 1):
                    r = marginal_observable(strategy, pair_player, i, b, j, c)
                    out = side_apply(r, side_apply(ideal, psi, single), pair_player)
                    hadamard[pair_player, i, j, b, c] = float(np.linalg.norm(out - psi))

    epsilon = max(list(xbar_res.values()) + list(stabilizers.values()) + list(comms.values()))
    return SoundnessReport(
        n=n, delta=delta, acceptance=acceptance, xbar_residuals=xbar_res,
        stabilizer_residuals=stabilizers, raw_stabilizer_residuals=raw_stabilizers,
        commutator_residuals=comms, hadamard_residuals=hadamard,
        measurement_commutators=meas_comm, epsilon=epsilon,
        xbar=xbar, psi=psi, z={p: list(strategy.z[p]) for p in PLAYERS},
    )


# -- extended state and swaps ------------------------------------------------------


def check_budget(n: int, dims: tuple[int, int]) -> None:
    if n > MAX_RIGIDITY_N:
        raise BudgetError(f"extended-state analysis is limited to n <= {MAX_RIGIDITY_N}, got n = {n}")
    total = dims[0] * 4 ** n * dims[1] * 4 ** n
    if total > MAX_JOINT_AMPLITUDES:
        raise BudgetError(
            f"extended state would hold {total} amplitudes (limit {MAX_JOINT_AMPLITUDES}); "
            f"local dimensions {dims} are too large at n = {n}"
        )


def extended_state(psi: np.ndarray, n: int) -> np.ndarray:
    """``psi (x) |EPR>^n_{A'} (x) |EPR>^n_{B'}`` as a side-A x side-B matrix."""
    e = epr_pairs_vector(n)
    return np.kron(np.asarray(psi, dtype=complex), np.outer(e, e))


def ancilla_pauli(op, qubit: int, n_qubits: int) -> np.ndarray:
    """2x2 ``op`` on ancilla qubit ``qubit`` of ``n_qubits``."""
    return np.kron(np.kron(np.eye(2 ** qubit), op), np.eye(2 ** (n_qubits - qubit - 1)))


def _swap_terms(pair: PauliPair):
    x, z = pair
    if operator_norm(anticommutator(x, z)) > EXACT_TOL:
        raise NonAnticommutingError("swap operators need exactly anti-commuting X and Z")
    eye = np.eye(x.shape[0])
    return ((eye, I2), (x, SX), (z, SZ), (1j * x @ z, SY))


def swap_operator(j: int, ops: Sequence[PauliPair], n: int, ancilla_offset: int = 0,
                  n_ancilla: int | None = None, verify: bool = True) -> np.ndarray:
    """``S_j``: swaps the qubit defined by ``ops[j]`` with ancilla qubit ``2j``."""
    n_anc = 2 * n if n_ancilla is None else n_ancilla
    qubit = ancilla_offset + 2 * j
    s = sum(np.kron(t, ancilla_pauli(sig, qubit, n_anc)) for t, sig in _swap_terms(ops[j])) / 2
    if verify:
        eye = np.eye(s.shape[0])
        if np.max(np.abs(s - dagger(s))) > EXACT_TOL or np.max(np.abs(s @ s - eye)) > 1e-9:
            raise NonAnticommutingError("swap operator failed the reflection check")
    return s


@dataclass(frozen=True)
class CrossOperator:
    """Sum of product terms ``left (x) right`` acting across the two sides."""

    terms: tuple[tuple[np.ndarray, np.ndarray], ...]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return sum(left @ psi @ right.T for left, right in self.terms)


def cross_swap_operator(j: int, other_ops: Sequence[PauliPair], n: int, side: str = "A",
                        player_dims: tuple[int, int] | None = None) -> CrossOperator:
    """``S'_j`` for ``side``: swaps the other player's qubit ``j`` with ancilla ``2j + 1`` of ``side``.

    ``player_dims`` gives the (side-A, side-B) player dimensions; the side that
    carries the ancilla needs its own dimension for the identity factor.
    """
    n_anc = 2 * n
    other_dim = other_ops[j][0].shape[0]
    own_dim = player_dims[PLAYERS.index(side)] if player_dims else other_dim
    terms = []
    for t, sig in _swap_terms(other_ops[j]):
        own = np.kron(np.eye(own_dim), ancilla_pauli(sig, 2 * j + 1, n_anc)) / 2
        oth = np.kron(t, np.eye(2 ** n_anc))
        terms.append((own, oth) if side == "A" else (oth, own))
    return CrossOperator(tuple(terms))


def lift(op: np.ndarray, n_ancilla: int) -> np.ndarray:
    """``op (x) I`` on the player's space plus ancilla qubits."""
    return np.kron(op, np.eye(2 ** n_ancilla))


def primed_operators(ops: Sequence[PauliPair], n: int, swaps: Sequence[np.ndarray] | None = None,
                     n_ancilla: int | None = None) -> list[PauliPair]:
    """``P'_j = (S_1 ... S_{j-1}) (P_j (x) I) (S_{j-1} ... S_1)``."""
    n_anc = 2 * n if n_ancilla is None else n_ancilla
    if swaps is None:
        swaps = [swap_operator(j, ops, n, n_ancilla=n_anc) for j in range(n)]
    out = []
    prefix = np.eye(swaps[0].shape[0], dtype=complex)  # S_1 ... S_{j-1}
    for j in range(n):
        primed = []
        for p in ops[j]:
            m = prefix @ lift(p, n_anc) @ dagger(prefix)
            primed.append((m + dagger(m)) / 2)
        out.append(tuple(primed))
        prefix = prefix @ swaps[j]
    return out


def structural_residuals(primed: Sequence[PauliPair]) -> tuple[float, float]:
    """(max cross-index commutator norm, max in-pair anti-commutator norm)."""
    comm = 0.0
    for i, j in combinations(range(len(primed)), 2):
        for p in primed[i]:
            for q in primed[j]:
                comm = max(comm, operator_norm(commutator(p, q)))
    anti = max(operator_norm(anticommutator(x, z)) for x, z in primed)
    return comm, anti


@dataclass(frozen=True)
class SwapReport:
    """Residuals of the swap construction on the extended state."""

    epsilon: float
    swap_switch: dict  # (side, i) -> ||(S_i - S'_i) psi'||
    swap_commutators: dict  # (side, i, j, P) -> ||[S_i, P_j (x) I] psi'||
    primed_closeness: dict  # (side, j, P) -> ||(P'_j - P_j (x) I) psi'||
    primed_stabilizers: dict  # (j, P) -> ||(P'_j (x) P'_j) psi' - psi'||
    primed_commutator_max: float
    primed_anticommutator_max: float
    swap_commutator_inputs: dict = field(default_factory=dict)  # (side, i, j, P) -> input bound

    @property
    def max_residual(self) -> float:
        vals = [*self.swap_switch.values(), *self.swap_commutators.values(),
                *self.primed_closeness.values(), *self.primed_stabilizers.values()]
        return max(vals, default=0.0)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_residual": self.max_residual,
            "primed_commutator_max": self.primed_commutator_max,
            "primed_anticommutator_max": self.primed_anticommutator_max,
            "swap_switch": [{"side": s, "i": i, "value": v} for (s, i), v in sorted(self.swap_switch.items())],
            "swap_commutators": [{"side": s, "i": i, "j": j, "P": p, "value": v}
                        for (s, i, j, p), v in sorted(self.swap_commutators.items())],
            "primed_closeness": [{"side": s, "j": j, "P": p, "value": v}
                                 for (s, j, p), v in sorted(self.primed_closeness.items())],
            "primed_stabilizers": [{"j": j, "P": p, "value": v}
                                   for (j, p), v in sorted(self.primed_stabilizers.items())],
        }


def input_epsilon(psi: np.ndarray, ops: dict[str, Sequence[PauliPair]]) -> float:
    """Largest commutator or stabilizer residual of the swap-construction inputs."""
    n = len(ops["A"])
    vals = []
    for side in PLAYERS:
        for i, j in permutations(range(n), 2):
            for p in ops[side][i]:
                for q in ops[side][j]:
                    vals.append(np.linalg.norm(side_apply(commutator(p, q), psi, side)))
    for j in range(n):
        for k in (0, 1):
            vals.append(np.linalg.norm(ops["A"][j][k] @ psi @ ops["B"][j][k].T - psi))
    return float(max(vals, default=0.0))


def swap_analysis(psi: np.ndarray, ops: dict[str, Sequence[PauliPair]]):
    """Build ``psi'``, swaps and primed operators for both sides and measure every residual.

    Returns ``(report, psi_prime, primed)`` with ``primed[side][j] = (X'_j, Z'_j)``.
    """
    n = len(ops["A"])
    psi = np.asarray(psi, dtype=complex)
    dims = psi.shape
    check_budget(n, dims)
    n_anc = 2 * n
    psi_p = extended_state(psi, n)
    swaps = {s: [swap_operator(j, ops[s], n) for j in range(n)] for s in PLAYERS}
    primed = {s: primed_operators(ops[s], n, swaps[s]) for s in PLAYERS}
    lifted = {s: [tuple(lift(p, n_anc) for p in pair) for pair in ops[s]] for s in PLAYERS}

    swap_switch, swap_commutators, swap_commutators_in, closeness = {}, {}, {}, {}
    for s in PLAYERS:
        other = "B" if s == "A" else "A"
        for i in range(n):
            cross = cross_swap_operator(i, ops[other], n, side=s, player_dims=dims)
            swap_switch[s, i] = float(np.linalg.norm(side_apply(swaps[s][i], psi_p, s) - cross.apply(psi_p)))
        for i, j in permutations(range(n), 2):
            for name, k in (("X", 0), ("Z", 1)):
                pl = lifted[s][j][k]
                sp = side_apply(swaps[s][i], psi_p, s)
                swap_commutators[s, i, j, name] = float(np.linalg.norm(
                    side_apply(swaps[s][i], side_apply(pl, psi_p, s), s) - side_apply(pl, sp, s)))
                # expected squared value of the commutator with each swap term
                terms = [commutator(t, ops[s][j][k]) for t in (ops[s][i][0], ops[s][i][1],
                                                               ops[s][i][0] @ ops[s][i][1])]
                swap_commutators_in[s, i, j, name] = float(math.sqrt(sum(
                    np.linalg.norm(side_apply(c, psi, s)) ** 2 for c in terms) / 4))
        for j in range(n):
            for name, k in (("X", 0), ("Z", 1)):
                diff = primed[s][j][k] - lifted[s][j][k]
                closeness[s, j, name] = float(np.linalg.norm(side_apply(diff, psi_p, s)))
    stabilizers = {}
    for j in range(n):
        for name, k in (("X", 0), ("Z", 1)):
            out = primed["A"][j][k] @ psi_p @ primed["B"][j][k].T
            stabilizers[j, name] = float(np.linalg.norm(out - psi_p))
    comm, anti = 0.0, 0.0
    for s in PLAYERS:
        c, a = structural_residuals(primed[s])
        comm, anti = max(comm, c), max(anti, a)
    report = SwapReport(input_epsilon(psi, ops), swap_switch, swap_commutators, closeness, stabilizers,
                        comm, anti, swap_commutators_in)
    return report, psi_p, primed


# -- factorization -----------------------------------------------------------------


def qubit_factorization(pairs: Sequence[PauliPair], tol: float = FACTORIZATION_TOL) -> np.ndarray:
    """Unitary ``U`` with ``U X_j U^dag = X_j (x) I`` and ``U Z_j U^dag = Z_j (x) I``.

    The output space is ``qubit 1 (x) ... (x) qubit n (x) H_hat``.  Requires the
    pairs to commute across indices and anti-commute within a pair to ``tol``.
    """
    n = len(pairs)
    for i, j in combinations(range(n), 2):
        for p in pairs[i]:
            for q in pairs[j]:
                if operator_norm(commutator(p, q)) > tol:
                    raise CommutationError(f"pairs {i} and {j} do not commute")
    for j, (x, z) in enumerate(pairs):
        if operator_norm(anticommutator(x, z)) > tol:
            raise CommutationError(f"pair {j} does not anti-commute")
    return _factor(list(pairs))


def _factor(pairs: list[PauliPair]) -> np.ndarray:
    x, z = pairs[0]
    dim = x.shape[0]
    v_plus, u_minus = _qubit_frame(z, x)
    v1 = np.vstack([dagger(v_plus), dagger(u_minus)])
    if len(pairs) == 1:
        return v1
    half = dim // 2
    rest = []
    for pair in pairs[1:]:
        blocks = []
        for p in pair:
            m = (v1 @ p @ dagger(v1))[:half, :half]
            blocks.append((m + dagger(m)) / 2)
        rest.append(tuple(blocks))
    return np.kron(np.eye(2), _factor(rest)) @ v1


def qubit_pauli(op, j: int, n: int, hidden_dim: int) -> np.ndarray:
    return np.kron(np.kron(np.kron(np.eye(2 ** j), op), np.eye(2 ** (n - j - 1))), np.eye(hidden_dim))


def conjugation_residuals(u: np.ndarray, pairs: Sequence[PauliPair]) -> dict:
    n = len(pairs)
    hidden = u.shape[0] // 2 ** n
    out = {}
    for j, pair in enumerate(pairs):
        for name, p, sig in (("X", pair[0], SX), ("Z", pair[1], SZ)):
            out[j, name] = operator_norm(u @ p @ dagger(u) - qubit_pauli(sig, j, n, hidden))
    return out


def epr_target(n: int) -> np.ndarray:
    """``|EPR>^n`` between the two sides' qubit registers as a ``2^n x 2^n`` matrix."""
    return np.eye(2 ** n, dtype=complex) / math.sqrt(2 ** n)


def distance_to_target(u_a, u_b, psi_prime, n: int, target: np.ndarray | None = None):
    """``min_extra ||U_A (x) U_B psi' - target (x) extra||``.

    Returns ``(distance, extra)`` with ``extra`` as an ``hA x hB`` matrix.
    """
    t = epr_target(n) if target is None else np.asarray(target, dtype=complex)
    q = 2 ** n
    phi = u_a @ psi_prime @ u_b.T
    ha, hb = phi.shape[0] // q, phi.shape[1] // q
    phi = phi.reshape(q, ha, q, hb)
    v = np.einsum("ab,aibj->ij", t.conj(), phi)
    nv = np.linalg.norm(v)
    if nv == 0:
        return float(math.sqrt(2.0)), np.zeros_like(v)
    extra = v / nv
    # explicit difference keeps full precision near zero
    dist = float(np.linalg.norm(phi - np.einsum("ab,ij->aibj", t, extra)))
    return dist, extra


def distance_to_epr_n(u_a, u_b, psi_prime, n: int, ops: dict[str, Sequence[PauliPair]] | None = None):
    """Distance to ``|EPR>^n (x) |extra>`` and the operator-closeness residuals.

    ``ops[side][j] = (X_j, Z_j)`` on the player's space; the residuals are
    ``||(U (P_j (x) I) U^dag - sigma_P^j (x) I)_D |EPR>^n |extra>||``.
    """
    dist, extra = distance_to_target(u_a, u_b, psi_prime, n)
    residuals = {}
    if ops is not None:
        ideal = np.kron(epr_target(n), extra)
        ideal = ideal.reshape(2 ** n, extra.shape[0], 2 ** n, extra.shape[1])
        ideal = ideal.reshape(2 ** n * extra.shape[0], 2 ** n * extra.shape[1])
        n_anc = 2 * n
        for side, u in (("A", u_a), ("B", u_b)):
            hidden = u.shape[0] // 2 ** n
            for j, pair in enumerate(ops[side]):
                for name, p, sig in (("X", pair[0], SX), ("Z", pair[1], SZ)):
                    diff = u @ lift(p, n_anc) @ dagger(u) - qubit_pauli(sig, j, n, hidden)
                    residuals[side, j, name] = float(np.linalg.norm(side_apply(diff, ideal, side)))
    return dist, residuals


@dataclass(frozen=True)
class FactorizationResult:
    u_a: np.ndarray = field(repr=False)
    u_b: np.ndarray = field(repr=False)
    distance: float = 0.0
    operator_residuals: dict = field(default_factory=dict)
    conjugation_residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "operator_residuals": [{"side": s, "j": j, "P": p, "value": v}
                                   for (s, j, p), v in sorted(self.operator_residuals.items())],
            "conjugation_residuals": [{"side": s, "j": j, "P": p, "value": v}
                                      for (s, j, p), v in sorted(self.conjugation_residuals.items())],
        }


def factorize(psi_prime, primed: dict, ops: dict, n: int) -> FactorizationResult:
    us = {s: qubit_factorization(primed[s]) for s in PLAYERS}
    conj = {(s, j, p): v for s in PLAYERS for (j, p), v in conjugation_residuals(us[s], primed[s]).items()}
    dist, residuals = distance_to_epr_n(us["A"], us["B"], psi_prime, n, ops)
    return FactorizationResult(us["A"], us["B"], dist, residuals, conj)


@dataclass(frozen=True)
class RigidityReport:
    soundness: SoundnessReport
    swaps: SwapReport
    factorization: FactorizationResult

    @property
    def distance(self) -> float:
        return self.factorization.distance

    def to_dict(self) -> dict:
        return {
            "n": self.soundness.n,
            "delta": self.soundness.delta,
            "epsilon": self.soundness.epsilon,
            "distance": self.distance,
            "soundness": self.soundness.to_dict(),
            "swaps": self.swaps.to_dict(),
            "factorization": self.factorization.to_dict(),
        }


def rigidity_pipeline(strategy: ProtocolStrategy) -> RigidityReport:
    """Soundness quantities, swap construction, factorization and final distance."""
    prepared = prepare_strategy(strategy)
    check_budget(prepared.n, prepared.dims)
    sound = soundness_quantities(prepared)
    ops = {s: sound.pairs(s) for s in PLAYERS}
    swaps, psi_p, primed = swap_analysis(prepared.psi, ops)
    fact = factorize(psi_p, primed, ops, prepared.n)
    return RigidityReport(sound, swaps, fact)


# -- state-closeness claims ------------------------------------------------------------


@dataclass(frozen=True)
class EPRClaimResult:
    phi_prime: np.ndarray
    distance: float
    delta_in: float
    degenerate: bool = False


def claim_epr_stabilized(phi, zero_tol: float = 1e-14) -> EPRClaimResult:
    """Round a state nearly stabilized by ``XX`` and ``ZZ`` on its first two qubits.

    ``phi`` is a vector of length ``4 m`` (two qubits then the rest).
    ``phi_prime = phi_00 / ||phi_00||``; if ``phi_00 = 0`` the distance is
    reported as ``sqrt(2)`` with ``degenerate`` set.
    """
    phi = np.asarray(phi, dtype=complex).reshape(2, 2, -1)
    xx = phi[::-1, ::-1, :]
    zz = phi * np.array([1, -1, -1, 1]).reshape(2, 2, 1)
    delta_in = float(max(np.linalg.norm(xx - phi), np.linalg.norm(zz - phi)))
    p00 = phi[0, 0]
    norm00 = np.linalg.norm(p00)
    if norm00 <= zero_tol:
        return EPRClaimResult(np.zeros_like(p00), float(math.sqrt(2.0)), delta_in, True)
    phi_p = p00 / norm00
    epr = np.array([[1, 0], [0, 1]]) / math.sqrt(2)
    dist = float(np.linalg.norm(phi - epr[:, :, None] * phi_p[None, None, :]))
    return EPRClaimResult(phi_p, dist, delta_in)


@dataclass(frozen=True)
class ProductRoundingResult:
    varphi: np.ndarray
    distance: float
    delta: float
    deltas: tuple[float, ...]
    bound: float
    holds: bool


def claim_product_rounding(psi, n: int, d: int, slack: float = 1e-12) -> ProductRoundingResult:
    """Round a state close to ``|1>_j |phi_j>`` for every register to ``|1>^n |varphi>``.

    ``psi`` has length ``d**n * h``; the basis state ``|1>`` is index 0 of each
    ``C^d`` register.  Each ``delta_j`` uses the optimal ``phi_j``.
    """
    psi = np.asarray(psi, dtype=complex)
    h = psi.size // d ** n
    arr = psi.reshape((d,) * n + (h,))
    deltas = []
    for j in range(n):
        fixed = np.zeros_like(arr)
        idx = [slice(None)] * (n + 1)
        idx[j] = 0
        fixed[tuple(idx)] = arr[tuple(idx)]
        nf = np.linalg.norm(fixed)
        if nf == 0:
            deltas.append(math.sqrt(2.0))
        else:
            deltas.append(float(np.linalg.norm(arr - fixed / nf)))
    delta = max(deltas)
    alpha = arr[(0,) * n]
    na = np.linalg.norm(alpha)
    if na == 0:
        varphi = np.zeros(h, dtype=complex)
        varphi[0] = 1.0
    else:
        varphi = alpha / na
    target = np.zeros_like(arr)
    target[(0,) * n] = varphi
    dist = float(np.linalg.norm(arr - target))
    bound = math.sqrt(2 * n) * delta
    return ProductRoundingResult(varphi, dist, delta, tuple(deltas), bound, dist <= bound + slack)


# -- scaling fits ---------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    """``log y = log C + sum_k exponent_k log feature_k`` by least squares."""

    constant: float
    exponents: dict
    max_relative_residual: float
    pointwise_constant: float | None = None

    def to_dict(self) -> dict:
        return {"constant": self.constant, "exponents": dict(self.exponents),
                "max_relative_residual": self.max_relative_residual,
                "pointwise_constant": self.pointwise_constant}


def fit_power_law(y: Sequence[float], features: dict[str, Sequence[float]]) -> PowerLawFit:
    y = np.asarray(y, dtype=float)
    names = list(features)
    cols = [np.ones_like(y)] + [np.log(np.asarray(features[k], dtype=float)) for k in names]
    design = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(design, np.log(y), rcond=None)
    pred = design @ coef
    rel = float(np.max(np.abs(np.exp(np.log(y) - pred) - 1)))
    return PowerLawFit(float(np.exp(coef[0])), dict(zip(names, map(float, coef[1:]))), rel)


def pointwise_constant(y: Sequence[float], scale: Sequence[float]) -> float:
    """Smallest ``C`` with ``y <= C * scale`` at every point."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(scale, dtype=float)
    return float(np.max(y / s))

"""The CHSH game: win probability, the optimal strategy and qubit extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qlin import (
    HAD,
    SX,
    SY,
    SZ,
    StateVector,
    check_reflection,
    dagger,
    eigenspace_basis,
    epr_state,
    RegisterLayout,
)

CHSH_OPTIMUM = float(np.cos(np.pi / 8) ** 2)
CLASSICAL_OPTIMUM = 0.75

# G = exp(-i pi/8 sigma_y)
G_ROTATION = np.cos(np.pi / 8) * np.eye(2) - 1j * np.sin(np.pi / 8) * SY


class UnbalancedReflectionError(ValueError):
    """A reflection whose +1 and -1 eigenspaces differ in dimension."""


@dataclass(frozen=True)
class GameStrategy:
    """Shared state plus one pair of reflections ``(R_0, R_1)`` per player."""

    shared_state: StateVector
    player1: tuple[np.ndarray, np.ndarray] = field(repr=False)
    player2: tuple[np.ndarray, np.ndarray] = field(repr=False)

    def __post_init__(self):
        d1, d2 = self.shared_state.layout.dims
        for dim, ops in ((d1, self.player1), (d2, self.player2)):
            if len(ops) != 2:
                raise ValueError("each player needs exactly two reflections")
            for r in ops:
                r = np.asarray(r)
                if r.shape != (dim, dim):
                    raise ValueError(f"reflection of shape {r.shape} on a factor of dimension {dim}")
                check_reflection(r)
        object.__setattr__(self, "player1", tuple(np.asarray(r, dtype=complex) for r in self.player1))
        object.__setattr__(self, "player2", tuple(np.asarray(r, dtype=complex) for r in self.player2))

    @classmethod
    def from_matrix(cls, psi, player1, player2) -> "GameStrategy":
        psi = np.asarray(psi, dtype=complex)
        layout = RegisterLayout.of(("P1", psi.shape[0]), ("P2", psi.shape[1]))
        return cls(StateVector(layout, psi.reshape(-1)), tuple(player1), tuple(player2))

    @property
    def psi(self) -> np.ndarray:
        return self.shared_state.as_matrix()

    def swapped(self) -> "GameStrategy":
        """The same strategy with the players' roles exchanged."""
        return GameStrategy.from_matrix(self.psi.T, self.player2, self.player1)


def chsh_value(a0, a1, b0, b1, psi) -> float:
    """Win probability ``1/2 + 1/8 sum_ab (-1)^{ab} <a_a (x) b_b>`` for a state matrix ``psi``.

    The player-2 observables may be any Hermitian contractions (marginalized POVMs).
    """
    psi = np.asarray(psi)
    a = (np.asarray(a0), np.asarray(a1))
    b = (np.asarray(b0), np.asarray(b1))
    total = 0.0
    for x in (0, 1):
        ap = a[x] @ psi
        for y in (0, 1):
            total += (-1) ** (x * y) * np.real(np.vdot(psi, ap @ b[y].T))
    return 0.5 + total / 8.0


def win_probability(strategy: GameStrategy) -> float:
    return chsh_value(*strategy.player1, *strategy.player2, strategy.psi)


def optimal_strategy() -> GameStrategy:
    """EPR pair with (Z, X) for player 1 and (H, -X H X) for player 2."""
    return GameStrategy(epr_state(), (SZ, SX), (HAD, -SX @ HAD @ SX))


def is_balanced(reflection, tol: float = 1e-8) -> bool:
    return abs(np.real(np.trace(np.asarray(reflection)))) <= tol


def pad_to_balanced(reflection) -> tuple[np.ndarray, bool]:
    """Return ``R`` unchanged if balanced, otherwise ``R (+) (-R)`` on the doubled space."""
    r = np.asarray(reflection, dtype=complex)
    check_reflection(r)
    if is_balanced(r):
        return r, False
    z = np.zeros_like(r)
    return np.block([[r, z], [z, -r]]), True


@dataclass(frozen=True)
class QubitExtraction:
    """Unitary ``V`` with ``V R0 V^dag = Z (x) I`` and the measured residual of ``R1``."""

    isomorphism: np.ndarray = field(repr=False)
    xbar: np.ndarray = field(repr=False)
    residual: float
    padded: bool = False

    @property
    def hidden_dim(self) -> int:
        return self.isomorphism.shape[0] // 2


def _qubit_frame(r0, r1) -> tuple[np.ndarray, np.ndarray]:
    """Bases ``(V+, U-)`` of the +-1 eigenspaces of ``r0`` paired through ``r1``.

    ``U-`` is ``V-`` rotated by the polar factor of the off-diagonal block
    ``V+^dag r1 V-``, so that the block becomes positive semidefinite.
    """
    r0 = np.asarray(r0, dtype=complex)
    r1 = np.asarray(r1, dtype=complex)
    check_reflection(r0)
    check_reflection(r1)
    if r0.shape != r1.shape:
        raise ValueError("reflections act on spaces of different dimension")
    if not is_balanced(r0):
        raise UnbalancedReflectionError("R0 must have +-1 eigenspaces of equal dimension; pad first")
    dim = r0.shape[0]
    eye = np.eye(dim)
    v_plus = eigenspace_basis((eye + r0) / 2)
    v_minus = eigenspace_basis((eye - r0) / 2)
    block = dagger(v_plus) @ r1 @ v_minus
    # polar factor from the SVD; singular directions are paired in SVD order
    us, _, vh = np.linalg.svd(block)
    w = us @ vh
    u_minus = v_minus @ dagger(w)
    return v_plus, u_minus


def rounded_x(r0, r1) -> np.ndarray:
    """Reflection anti-commuting exactly with ``r0`` obtained by rounding ``r1``."""
    v_plus, u_minus = _qubit_frame(r0, r1)
    xbar = v_plus @ dagger(u_minus) + u_minus @ dagger(v_plus)
    return (xbar + dagger(xbar)) / 2


def _player_apply(op, psi, player: int) -> np.ndarray:
    return op @ psi if player == 1 else psi @ np.asarray(op).T


def extract_qubit(r0, r1, state, player: int) -> QubitExtraction:
    """Split the player's space as ``C^2 (x) H_hat`` so that ``r0 = Z (x) I``.

    ``state`` is a :class:`StateVector` over (player 1, player 2) or the
    equivalent amplitude matrix.  The residual is ``||(r1 - Xbar)_player |psi>||``
    where ``Xbar = V^dag (X (x) I) V``.
    """
    if player not in (1, 2):
        raise ValueError("player must be 1 or 2")
    psi = state.as_matrix() if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    dim = np.asarray(r0).shape[0]
    if psi.shape[player - 1] != dim:
        raise ValueError(f"player {player} factor has dimension {psi.shape[player - 1]}, reflections {dim}")
    v_plus, u_minus = _qubit_frame(r0, r1)
    iso = np.vstack([dagger(v_plus), dagger(u_minus)])
    xbar = v_plus @ dagger(u_minus) + u_minus @ dagger(v_plus)
    xbar = (xbar + dagger(xbar)) / 2
    diff = np.asarray(r1) - xbar
    residual = float(np.linalg.norm(_player_apply(diff, psi, player)))
    return QubitExtraction(iso, xbar, residual)


def ideal_chsh_state() -> np.ndarray:
    """``(I (x) HG)|EPR>`` as a 2x2 amplitude matrix."""
    return (np.eye(2) / np.sqrt(2)) @ (HAD @ G_ROTATION).T


def ideal_state_distance(state, ext1: QubitExtraction, ext2: QubitExtraction):
    """Distance from ``(V1 (x) V2)|psi>`` to ``(I (x) HG)|EPR> (x) |psi_hat>``, minimized over ``psi_hat``.

    Returns ``(distance, psi_hat)`` with ``psi_hat`` as an ``m1 x m2`` matrix.
    """
    psi = state.as_matrix() if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    phi = ext1.isomorphism @ psi @ ext2.isomorphism.T
    m1, m2 = ext1.hidden_dim, ext2.hidden_dim
    phi = phi.reshape(2, m1, 2, m2)
    target = ideal_chsh_state()
    v = np.einsum("pq,piqj->ij", target.conj(), phi)
    nv = np.linalg.norm(v)
    if nv == 0:
        return float(np.sqrt(2.0)), np.zeros_like(v)
    psi_hat = v / nv
    # explicit difference; sqrt(2 - 2|v|) loses half the digits near zero
    distance = float(np.linalg.norm(phi - np.einsum("pq,ij->piqj", target, psi_hat)))
    return distance, psi_hat


def anticommutator_norm(r0, xbar) -> float:
    r0, xbar = np.asarray(r0), np.asarray(xbar)
    return float(np.linalg.norm(r0 @ xbar + xbar @ r0, 2))


__all__ = [
    "CHSH_OPTIMUM",
    "CLASSICAL_OPTIMUM",
    "G_ROTATION",
    "GameStrategy",
    "QubitExtraction",
    "UnbalancedReflectionError",
    "anticommutator_norm",
    "chsh_value",
    "extract_qubit",
    "ideal_chsh_state",
    "ideal_state_distance",
    "is_balanced",
    "optimal_strategy",
    "pad_to_balanced",
    "rounded_x",
    "win_probability",
]

"""Register-aware dense linear algebra for pure bipartite states.

Amplitudes are stored row-major over the factors of a :class:`RegisterLayout`:
the first factor is the most significant index.  All operators are dense
complex matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

STATE_NORM_TOL = 1e-12
OPERATOR_TOL = 1e-10
REFLECTION_SPECTRUM_TOL = 1e-8
_SVD_MAX_DIM = 1024


class LayoutError(ValueError):
    """Unknown register label or inconsistent dimensions."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered tensor factors ``(label, dimension)``."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(lbl), int(dim)) for lbl, dim in self.factors)
        labels = [lbl for lbl, _ in factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate register labels in {labels}")
        if any(dim < 1 for _, dim in factors):
            raise LayoutError("register dimensions must be positive")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(factors))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown register {label!r}") from None

    def dim_of(self, label: str) -> int:
        return self.factors[self.index(label)][1]

    def __len__(self) -> int:
        return len(self.factors)

    def __add__(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.factors + other.factors)


@dataclass(frozen=True)
class StateVector:
    """A unit vector on ``layout``."""

    layout: RegisterLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutError(
                f"state has {amps.shape[0]} amplitudes, layout needs {self.layout.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {STATE_NORM_TOL}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, layout: RegisterLayout, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(layout, amps / np.linalg.norm(amps))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def as_matrix(self, split: int = 1) -> np.ndarray:
        """Reshape into a matrix whose rows are the first ``split`` factors."""
        rows = int(np.prod(self.layout.dims[:split], dtype=np.int64))
        return self.amplitudes.reshape(rows, -1)


@dataclass(frozen=True)
class Operator:
    """Square complex matrix with optionally verified structure flags."""

    entries: np.ndarray = field(repr=False)
    hermitian: bool = False
    reflection: bool = False
    unitary: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if self.reflection:
            check_reflection(m)
        if self.hermitian and not is_hermitian(m):
            raise ValueError("operator flagged hermitian is not")
        if self.unitary and not is_unitary(m):
            raise ValueError("operator flagged unitary is not")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        return Operator(self.entries @ np.asarray(other))

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T, hermitian=self.hermitian,
                        reflection=self.reflection, unitary=self.unitary)


def is_hermitian(m, tol: float = OPERATOR_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_unitary(m, tol: float = OPERATOR_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0) <= tol)


def check_reflection(m, tol: float = OPERATOR_TOL, spectrum_tol: float = REFLECTION_SPECTRUM_TOL):
    """Raise ``ValueError`` unless ``m`` is Hermitian with spectrum in {+1, -1}."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise ValueError("reflection must be Hermitian")
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
    off = np.min(np.abs(np.abs(ev)[:, None] - 1.0), axis=1)
    if np.max(off) > spectrum_tol:
        raise ValueError(f"reflection has eigenvalue off +-1 by {np.max(off):.3g}")
    if np.max(np.abs(m @ m - np.eye(m.shape[0]))) > tol:
        raise ValueError("reflection does not square to the identity")


def is_reflection(m, tol: float = OPERATOR_TOL) -> bool:
    try:
        check_reflection(m, tol)
    except ValueError:
        return False
    return True


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
}


def pauli(name: str) -> Operator:
    """Single-qubit reflection by name: one of I, X, Y, Z, H."""
    try:
        m = _PAULI[name.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown single-qubit reflection {name!r}") from None
    return Operator(m, hermitian=True, reflection=True, unitary=True)


# Plain-array shortcuts used throughout the package.
I2 = _PAULI["I"]
SX = _PAULI["X"]
SY = _PAULI["Y"]
SZ = _PAULI["Z"]
HAD = _PAULI["H"]


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op))
    return out


def tensor_embed(op, targets: Sequence[str], layout: RegisterLayout) -> Operator:
    """Lift ``op`` acting on ``targets`` (in that factor order) to the full layout."""
    m = np.asarray(op, dtype=complex)
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise LayoutError("duplicate target registers")
    t_axes = [layout.index(t) for t in targets]
    t_dims = [layout.dims[a] for a in t_axes]
    if m.shape != (int(np.prod(t_dims)),) * 2:
        raise LayoutError(f"operator of shape {m.shape} does not match targets {targets} with dims {t_dims}")
    rest = [a for a in range(len(layout)) if a not in t_axes]
    rest_dim = int(np.prod([layout.dims[a] for a in rest], dtype=np.int64))
    full = np.kron(m, np.eye(rest_dim, dtype=complex))
    order = t_axes + rest
    dims = [layout.dims[a] for a in order]
    k = len(order)
    full = full.reshape(dims + dims)
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [k + i for i in inv])
    n = layout.total_dim
    return Operator(full.reshape(n, n))


def apply_on(op, targets: Sequence[str], vec, layout: RegisterLayout) -> np.ndarray:
    """Apply ``op`` on ``targets`` of a vector over ``layout`` without forming the full matrix."""
    m = np.asarray(op, dtype=complex)
    t_axes = [layout.index(t) for t in targets]
    t_dims = [layout.dims[a] for a in t_axes]
    psi = np.asarray(vec, dtype=complex).reshape(layout.dims)
    m = m.reshape(t_dims + t_dims)
    k = len(t_axes)
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), t_axes))
    # tensordot puts the output target axes first
    out = np.moveaxis(out, list(range(k)), t_axes)
    return out.reshape(-1)


def apply(op, state) -> np.ndarray:
    """Matrix-vector product; the result is not renormalized."""
    m = np.asarray(op)
    v = np.asarray(state).reshape(-1)
    if m.shape[1] != v.shape[0]:
        raise LayoutError(f"operator dimension {m.shape[1]} does not match state dimension {v.shape[0]}")
    return m @ v


def state_distance(u, v) -> float:
    return float(np.linalg.norm(np.asarray(u).reshape(-1) - np.asarray(v).reshape(-1)))


def operator_norm(op, tol: float = 1e-10) -> float:
    """Largest singular value: exact SVD up to dimension 1024, power iteration above."""
    m = np.asarray(op, dtype=complex)
    if m.size == 0:
        raise ValueError("operator_norm of an empty matrix")
    if max(m.shape) <= _SVD_MAX_DIM:
        if m.shape[0] == m.shape[1]:
            # (anti-)Hermitian inputs, such as commutators of reflections, take the cheaper eigensolver
            scale = max(float(np.max(np.abs(m))), 1e-300)
            if np.max(np.abs(m - m.conj().T)) <= 1e-14 * scale:
                return float(np.max(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
            if np.max(np.abs(m + m.conj().T)) <= 1e-14 * scale:
                h = 1j * m
                return float(np.max(np.abs(np.linalg.eigvalsh((h + h.conj().T) / 2))))
        return float(np.linalg.svd(m, compute_uv=False)[0])
    return _power_norm(m, tol)


def _power_norm(m: np.ndarray, tol: float, max_iter: int = 10_000) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = m.conj().T @ (m @ v)
        new = np.linalg.norm(w)
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(np.sqrt(est))


def commutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return a @ b + b @ a


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def epr_state() -> StateVector:
    return StateVector(RegisterLayout.of(("q1", 2), ("q2", 2)),
                       np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))


def epr_pairs_vector(n: int) -> np.ndarray:
    """``|EPR>^{(x) n}`` on 2n qubits with pair k on qubits (2k, 2k+1)."""
    out = np.ones(1, dtype=complex)
    e = np.asarray(epr_state())
    for _ in range(n):
        out = np.kron(out, e)
    return out


def psi_prime_layout(n: int, base_layout: RegisterLayout,
                     sides: Iterable[str] = ("A", "B")) -> RegisterLayout:
    """Insert ``2n`` ancilla qubits ``<side>'1 .. <side>'2n`` right after each side register."""
    sides = list(sides)
    for s in sides:
        base_layout.index(s)
    factors = []
    for lbl, dim in base_layout.factors:
        factors.append((lbl, dim))
        if lbl in sides:
            factors.extend((f"{lbl}'{k}", 2) for k in range(1, 2 * n + 1))
    return RegisterLayout(tuple(factors))


def bipartite_layout(dim_a: int, dim_b: int) -> RegisterLayout:
    return RegisterLayout.of(("A", dim_a), ("B", dim_b))


def correlator(a, b, psi: np.ndarray) -> float:
    """Real part of <psi| a (x) b |psi> for ``psi`` given as a ``dim_a x dim_b`` matrix."""
    psi = np.asarray(psi)
    return float(np.real(np.vdot(psi, np.asarray(a) @ psi @ np.asarray(b).T)))


def local_apply(psi: np.ndarray, a=None, b=None) -> np.ndarray:
    """(a (x) b)|psi> with ``psi`` as a matrix; ``None`` means identity on that side."""
    out = np.asarray(psi)
    if a is not None:
        out = np.asarray(a) @ out
    if b is not None:
        out = out @ np.asarray(b).T
    return out


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_reflection(dim: int, rng: np.random.Generator, plus: int | None = None) -> np.ndarray:
    """Random reflection; ``plus`` fixes the +1 eigenspace dimension (default: half, rounded down)."""
    plus = dim // 2 if plus is None else plus
    u = random_unitary(dim, rng)
    signs = np.array([1.0] * plus + [-1.0] * (dim - plus))
    m = (u * signs) @ u.conj().T
    return (m + m.conj().T) / 2


def eigenspace_basis(projector, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the range of ``projector`` built deterministically.

    The canonical basis vectors are projected in index order and orthonormalized;
    vectors with negligible new component are skipped.  The result is independent
    of LAPACK's choice of eigenvectors inside degenerate eigenspaces.
    """
    p = np.asarray(projector, dtype=complex)
    dim = p.shape[0]
    rank = int(round(float(np.real(np.trace(p)))))
    basis = np.zeros((dim, rank), dtype=complex)
    k = 0
    for idx in range(dim):
        if k == rank:
            break
        v = p[:, idx].copy()
        if k:
            # two passes of classical Gram-Schmidt
            v -= basis[:, :k] @ (basis[:, :k].conj().T @ v)
            v -= basis[:, :k] @ (basis[:, :k].conj().T @ v)
        nv = np.linalg.norm(v)
        if nv > tol:
            basis[:, k] = v / nv
            k += 1
    if k != rank:
        raise np.linalg.LinAlgError(f"projector rank {rank} but found {k} independent columns")
    return basis


def matrix_sign(h, zero_tol: float = 1e-12) -> np.ndarray:
    """Reflection closest to Hermitian ``h``: eigenvalues mapped to their sign (zero -> +1)."""
    h = np.asarray(h, dtype=complex)
    ev, vec = np.linalg.eigh((h + h.conj().T) / 2)
    signs = np.where(ev >= -zero_tol, 1.0, -1.0)
    out = (vec * signs) @ vec.conj().T
    return (out + out.conj().T) / 2

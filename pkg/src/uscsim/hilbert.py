"""Truncated Hilbert spaces, embedded operators and state utilities.

Qubit basis ordering is ``(|g>, |e>)`` so that ``sigma_z = |e><e| - |g><g|``
is ``diag(-1, +1)`` and ``sigma_+ = |e><g|``.  Bosonic modes use the Fock
basis ``|0>, ..., |nmax>``.  Subsystems are tensored left to right in the
order they appear in a :class:`SystemLayout`.

States are plain numpy arrays: 1-D for kets, 2-D for density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    InvalidState,
    InvalidSubsystem,
    InvalidTruncation,
    LayoutMismatch,
)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-8
NORM_TOL = 1e-10
MAX_DENSE_DIM = 8192


@dataclass(frozen=True)
class Qubit:
    label: str = "q"

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class BosonMode:
    nmax: int
    label: str = "a"

    def __post_init__(self):
        if int(self.nmax) != self.nmax or self.nmax < 1:
            raise InvalidTruncation(f"mode {self.label!r}: nmax must be an integer >= 1, got {self.nmax}")

    @property
    def dim(self) -> int:
        return self.nmax + 1


Subsystem = Qubit | BosonMode


@dataclass(frozen=True)
class SystemLayout:
    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        if not self.subsystems:
            raise InvalidSubsystem("layout needs at least one subsystem")
        if self.total_dim > MAX_DENSE_DIM:
            raise InvalidTruncation(
                f"total dimension {self.total_dim} exceeds dense budget {MAX_DENSE_DIM}"
            )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def qubit_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.subsystems) if isinstance(s, Qubit))

    @property
    def mode_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.subsystems) if isinstance(s, BosonMode))

    def index(self, label: str) -> int:
        for i, s in enumerate(self.subsystems):
            if s.label == label:
                return i
        raise InvalidSubsystem(f"no subsystem labelled {label!r}")

    def with_nmax(self, nmax: int) -> "SystemLayout":
        """Same layout with every mode cutoff replaced by ``nmax``."""
        return SystemLayout(tuple(
            BosonMode(nmax, s.label) if isinstance(s, BosonMode) else s for s in self.subsystems
        ))


def qubit_mode_layout(nmax: int, n_qubits: int = 1, n_modes: int = 1) -> SystemLayout:
    """Qubits first, then modes: the ordering used by every model builder."""
    qs = [Qubit(f"q{i}") for i in range(n_qubits)]
    ms = [BosonMode(nmax, f"a{i}") for i in range(n_modes)]
    return SystemLayout(tuple(qs + ms))


@dataclass(frozen=True, eq=False)
class COperator:
    """Dense operator on a layout.  Supports ``+ - * @`` and ``.dag()``."""

    layout: SystemLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise LayoutMismatch(f"matrix shape {m.shape} does not match layout dimension {d}")
        object.__setattr__(self, "matrix", m)

    @property
    def hermitian(self) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= HERMITIAN_TOL)

    def dag(self) -> "COperator":
        return COperator(self.layout, self.matrix.conj().T)

    def _other(self, other) -> np.ndarray:
        if isinstance(other, COperator):
            if other.layout != self.layout:
                raise LayoutMismatch("operators are defined on different layouts")
            return other.matrix
        return other * np.eye(self.layout.total_dim)

    def __add__(self, other):
        return COperator(self.layout, self.matrix + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return COperator(self.layout, self.matrix - self._other(other))

    def __rsub__(self, other):
        return COperator(self.layout, self._other(other) - self.matrix)

    def __neg__(self):
        return COperator(self.layout, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, COperator):
            raise TypeError("use @ for operator products")
        return COperator(self.layout, scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return COperator(self.layout, self.matrix / scalar)

    def __matmul__(self, other):
        if isinstance(other, COperator):
            return COperator(self.layout, self.matrix @ self._other(other))
        return self.matrix @ other

    def commutator(self, other: "COperator") -> "COperator":
        return self @ other - other @ self


# ---------------------------------------------------------------- local blocks

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),  # i(sigma_- - sigma_+)
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 0], [1, 0]], dtype=complex),
    "-": np.array([[0, 1], [0, 0]], dtype=complex),
}


def local_destroy(nmax: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, nmax + 1, dtype=float)), 1).astype(complex)


def local_pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of x, y, z, +, -") from None


def embed(layout: SystemLayout, index: int, local: np.ndarray) -> COperator:
    """Place ``local`` on subsystem ``index`` with identities elsewhere."""
    if not 0 <= index < len(layout.subsystems):
        raise InvalidSubsystem(f"subsystem index {index} out of range")
    local = np.asarray(local, dtype=complex)
    dims = layout.dims
    if local.shape != (dims[index], dims[index]):
        raise InvalidSubsystem(f"local operator shape {local.shape} does not fit subsystem {index}")
    left = int(np.prod(dims[:index]))
    right = int(np.prod(dims[index + 1:]))
    mat = np.kron(np.kron(np.eye(left), local), np.eye(right))
    return COperator(layout, mat)


def _require(layout: SystemLayout, index: int, kind: type) -> Subsystem:
    if not 0 <= index < len(layout.subsystems):
        raise InvalidSubsystem(f"subsystem index {index} out of range")
    sub = layout.subsystems[index]
    if not isinstance(sub, kind):
        raise InvalidSubsystem(f"subsystem {index} is a {type(sub).__name__}, expected {kind.__name__}")
    return sub


def make_identity(layout: SystemLayout) -> COperator:
    return COperator(layout, np.eye(layout.total_dim))


def make_destroy(layout: SystemLayout, mode_index: int) -> COperator:
    sub = _require(layout, mode_index, BosonMode)
    return embed(layout, mode_index, local_destroy(sub.nmax))


def make_create(layout: SystemLayout, mode_index: int) -> COperator:
    return make_destroy(layout, mode_index).dag()


def make_number(layout: SystemLayout, mode_index: int) -> COperator:
    sub = _require(layout, mode_index, BosonMode)
    return embed(layout, mode_index, np.diag(np.arange(sub.nmax + 1, dtype=float)))


def make_pauli(layout: SystemLayout, qubit_index: int, axis: str) -> COperator:
    _require(layout, qubit_index, Qubit)
    return embed(layout, qubit_index, local_pauli(axis))


def make_quadratures(layout: SystemLayout, mode_index: int) -> tuple[COperator, COperator]:
    """Position-like ``(a + a^dag)/sqrt2`` and momentum-like ``-i(a - a^dag)/sqrt2``."""
    a = make_destroy(layout, mode_index)
    ad = a.dag()
    return (a + ad) / np.sqrt(2), (a - ad) * (-1j / np.sqrt(2))


def parity_operator(
    layout: SystemLayout,
    qubit_index: int | Sequence[int] | None = 0,
    mode_index: int | Sequence[int] | None = None,
) -> COperator:
    """Product of ``sigma_z`` on the chosen qubits and ``(-1)^n`` on the chosen modes.

    ``None`` selects every subsystem of that kind, which gives the generalized
    parity conserved by all dipole-coupled models in :mod:`uscsim.models`.
    """
    qs = layout.qubit_indices if qubit_index is None else np.atleast_1d(qubit_index)
    ms = layout.mode_indices if mode_index is None else np.atleast_1d(mode_index)
    diag = np.ones(1)
    for i, sub in enumerate(layout.subsystems):
        if i in qs:
            _require(layout, i, Qubit)
            block = np.array([-1.0, 1.0])
        elif i in ms:
            _require(layout, i, BosonMode)
            block = (-1.0) ** np.arange(sub.dim)
        else:
            block = np.ones(sub.dim)
        diag = np.kron(diag, block)
    return COperator(layout, np.diag(diag))


# ---------------------------------------------------------------- states

_QUBIT_LABELS = {"g": 0, "e": 1, 0: 0, 1: 1, "-": 0, "+": 1}


def basis_state(layout: SystemLayout, labels: Sequence) -> np.ndarray:
    """Product basis ket, e.g. ``basis_state(layout, ("g", 0))`` for ``|g,0>``.

    Qubit labels accept ``g``/``e`` (also ``-``/``+`` for sigma_z eigenstates);
    mode labels are Fock numbers.
    """
    if len(labels) != len(layout.subsystems):
        raise LayoutMismatch(f"expected {len(layout.subsystems)} labels, got {len(labels)}")
    ket = np.ones(1, dtype=complex)
    for sub, lab in zip(layout.subsystems, labels):
        local = np.zeros(sub.dim, dtype=complex)
        if isinstance(sub, Qubit):
            if lab not in _QUBIT_LABELS:
                raise InvalidState(f"unknown qubit label {lab!r}")
            local[_QUBIT_LABELS[lab]] = 1.0
        else:
            if not 0 <= int(lab) <= sub.nmax:
                raise InvalidTruncation(f"Fock label {lab} outside 0..{sub.nmax}")
            local[int(lab)] = 1.0
        ket = np.kron(ket, local)
    return ket


def tensor(*parts: np.ndarray) -> np.ndarray:
    out = np.ones(1, dtype=complex) if parts[0].ndim == 1 else np.ones((1, 1), dtype=complex)
    for p in parts:
        out = np.kron(out, p)
    return out


def displaced_vacuum(nmax: int, beta: complex) -> np.ndarray:
    """``exp(beta a^dag - beta* a)|0>`` evaluated in the truncated space."""
    a = local_destroy(nmax)
    vac = np.zeros(nmax + 1, dtype=complex)
    vac[0] = 1.0
    return expm(beta * a.conj().T - np.conj(beta) * a) @ vac


def qubit_ket(theta: float = 0.0, phi: float = 0.0) -> np.ndarray:
    """Bloch-sphere ket ``cos(theta/2)|g> + e^{i phi} sin(theta/2)|e>``."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def validate_state(state: np.ndarray, layout: SystemLayout | None = None) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if layout is not None and state.shape[0] != layout.total_dim:
        raise LayoutMismatch(f"state dimension {state.shape[0]} vs layout {layout.total_dim}")
    if state.ndim == 1:
        if abs(np.linalg.norm(state) - 1.0) > NORM_TOL:
            raise InvalidState(f"ket norm {np.linalg.norm(state):.3e} differs from 1")
    elif state.ndim == 2:
        if abs(np.trace(state).real - 1.0) > NORM_TOL:
            raise InvalidState("density matrix trace differs from 1")
        if np.max(np.abs(state - state.conj().T)) > HERMITIAN_TOL:
            raise InvalidState("density matrix is not Hermitian")
        if np.linalg.eigvalsh(state)[0] < -1e-9:
            raise InvalidState("density matrix has a negative eigenvalue")
    else:
        raise InvalidState("state must be a 1-D ket or a 2-D density matrix")
    return state


def expectation(state: np.ndarray, op: COperator | np.ndarray) -> complex:
    mat = op.matrix if isinstance(op, COperator) else np.asarray(op)
    state = np.asarray(state)
    if state.shape[0] != mat.shape[0]:
        raise LayoutMismatch(f"state dimension {state.shape[0]} vs operator {mat.shape[0]}")
    if state.ndim == 1:
        return complex(np.vdot(state, mat @ state))
    return complex(np.trace(state @ mat))


def reduced_density(layout: SystemLayout, state: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Partial trace keeping the subsystems in ``keep`` (in layout order)."""
    keep = sorted(int(k) for k in keep)
    for k in keep:
        if not 0 <= k < len(layout.subsystems):
            raise InvalidSubsystem(f"subsystem index {k} out of range")
    dims = layout.dims
    n = len(dims)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        psi = state.reshape(dims)
        traced = [i for i in range(n) if i not in keep]
        # rho_keep = sum over traced indices of psi psi^*
        letters = "abcdefghijklmnopqrstuvwxyz"
        left = [letters[i] for i in range(n)]
        right = [letters[i] if i in traced else letters[i].upper() for i in range(n)]
        out = [letters[i] for i in keep] + [letters[i].upper() for i in keep]
        expr = f"{''.join(left)},{''.join(right)}->{''.join(out)}"
        rho = np.einsum(expr, psi, psi.conj())
    else:
        rho_t = state.reshape(dims + dims)
        letters = "abcdefghijklmnopqrstuvwxyz"
        row = [letters[i] for i in range(n)]
        col = [letters[i] if i not in keep else letters[i].upper() for i in range(n)]
        out = [letters[i] for i in keep] + [letters[i].upper() for i in keep]
        rho = np.einsum(f"{''.join(row)}{''.join(col)}->{''.join(out)}", rho_t)
    d = int(np.prod([dims[k] for k in keep]))
    return rho.reshape(d, d)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in nats; eigenvalues below 1e-15 are dropped."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for kets, ``<a|rho|a>`` when one argument is a density matrix."""
    a, b = np.asarray(a), np.asarray(b)
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        return float(np.real(np.vdot(a, b @ a)))
    if b.ndim == 1:
        return float(np.real(np.vdot(b, a @ b)))
    raise ValueError("mixed-mixed fidelity is not needed here")


def fock_populations(layout: SystemLayout, state: np.ndarray, mode_index: int) -> np.ndarray:
    _require(layout, mode_index, BosonMode)
    rho = reduced_density(layout, state, [mode_index])
    return np.clip(np.real(np.diag(rho)), 0.0, None)


def top_level_population(layout: SystemLayout, state: np.ndarray, levels: int = 2) -> float:
    """Largest population held in the top ``levels`` Fock states of any mode."""
    worst = 0.0
    for m in layout.mode_indices:
        p = fock_populations(layout, state, m)
        worst = max(worst, float(np.sum(p[-levels:])))
    return worst


def converge_nmax(
    quantity: Callable[[int], np.ndarray | float],
    nmax: int,
    rtol: float = 1e-8,
    max_doublings: int = 3,
) -> tuple[int, np.ndarray, float]:
    """Double the cutoff until ``quantity(nmax)`` stops changing.

    Returns ``(nmax, value, relative_change)`` for the last comparison made.
    """
    prev = np.asarray(quantity(nmax), dtype=float)
    change = np.inf
    for _ in range(max_doublings):
        nmax *= 2
        cur = np.asarray(quantity(nmax), dtype=float)
        scale = np.maximum(np.abs(cur), 1e-300)
        change = float(np.max(np.abs(cur - prev) / scale))
        prev = cur
        if change <= rtol:
            break
    return nmax, prev, change

"""Exact dense state-vector engine.

Serves two roles: the construction substrate for chain and consensus
simulation, and the brute-force oracle every higher layer is checked
against. States are complex128 vectors over the computational basis with
the first qubit most significant; operators are dense matrices. Exactness
checks use EXACT_TOL, statistical tolerances are the caller's business.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolationError, NumericalDegeneracyError

EXACT_TOL = 1e-10

# Dense vectors above this size are out of scope (non-goal: ~14 qubits max).
MAX_QUBITS = 14


def _bit_count(size: int) -> int:
    n = size.bit_length() - 1
    if size < 2 or size != 1 << n:
        raise ContractViolationError(f"amplitude count {size} is not a power of two >= 2")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state; amplitudes indexed MSB-first by qubit."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1).copy()
        _bit_count(arr.size)
        if abs(np.vdot(arr, arr).real - 1.0) > EXACT_TOL:
            raise ContractViolationError("state vector is not normalized")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def qubit_count(self) -> int:
        return self.amplitudes.size.bit_length() - 1


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """Square complex matrix with U+U = I enforced at construction."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=np.complex128).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolationError("unitary must be a square matrix")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=EXACT_TOL):
            raise ContractViolationError("matrix is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.entries.conj().T)


IDENTITY_2 = UnitaryMatrix(np.eye(2))
PAULI_X = UnitaryMatrix(np.array([[0, 1], [1, 0]]))
PAULI_Z = UnitaryMatrix(np.diag([1, -1]))
HADAMARD = UnitaryMatrix(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
CNOT = UnitaryMatrix(np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))


def phase_gate(theta: float) -> UnitaryMatrix:
    """diag(1, e^{i theta}) on one qubit."""
    return UnitaryMatrix(np.diag([1.0, np.exp(1j * theta)]))


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """Ordered complete family of orthogonal projectors with outcome labels.

    Completeness (sum = I), idempotence, and hermiticity are enforced at
    construction so downstream Born sampling can trust the family.
    """

    projectors: tuple[np.ndarray, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        projs = tuple(np.asarray(p, dtype=np.complex128) for p in self.projectors)
        labels = tuple(str(label) for label in self.labels)
        if not projs:
            raise ContractViolationError("projector set is empty")
        if len(projs) != len(labels) or len(set(labels)) != len(labels):
            raise ContractViolationError("labels must be unique, one per projector")
        dim = projs[0].shape[0]
        total = np.zeros((dim, dim), dtype=np.complex128)
        for p in projs:
            if p.shape != (dim, dim):
                raise ContractViolationError("projectors must share one square shape")
            if not np.allclose(p, p.conj().T, atol=EXACT_TOL):
                raise ContractViolationError("projector is not hermitian")
            if not np.allclose(p @ p, p, atol=EXACT_TOL):
                raise ContractViolationError("projector is not idempotent")
            total += p
        if not np.allclose(total, np.eye(dim), atol=EXACT_TOL):
            raise ContractViolationError("projectors do not sum to identity")
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return self.projectors[0].shape[0]

    def probabilities(self, state: StateVector) -> np.ndarray:
        """Born probabilities of each outcome, clipped into [0, 1]."""
        if state.amplitudes.size != self.dimension:
            raise ContractViolationError("state and projector dimensions differ")
        psi = state.amplitudes
        probs = np.array([np.vdot(psi, p @ psi).real for p in self.projectors])
        return np.clip(probs, 0.0, 1.0)


@dataclass
class RandomSource:
    """Deterministic random stream: same (seed, stream_index), same draws.

    One instance belongs to one logical execution stream; parallel trials
    derive their own via derive(trial_index).
    """

    seed: int
    stream_index: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ContractViolationError("seed must be an unsigned 64-bit integer")
        ss = np.random.SeedSequence(entropy=(self.seed, self.stream_index))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, index: int) -> "RandomSource":
        """Independent child stream for trial `index` of the same master seed."""
        return RandomSource(self.seed, index)

    def random(self) -> float:
        return float(self._gen.random())

    def integers(self, upper: int) -> int:
        return int(self._gen.integers(upper))

    def choice(self, upper: int, size: int, p: Sequence[float]) -> np.ndarray:
        return self._gen.choice(upper, size=size, p=np.asarray(p))

    def permutation(self, upper: int) -> np.ndarray:
        return self._gen.permutation(upper)

    def normal(self, size: tuple[int, ...]) -> np.ndarray:
        return self._gen.normal(size=size)


def basis_ket(bits: Sequence[int]) -> StateVector:
    """Computational basis state for the given bits, first bit most significant."""
    if len(bits) == 0:
        raise ContractViolationError("bit sequence must be nonempty")
    if any(b not in (0, 1) for b in bits):
        raise ContractViolationError("bits must be 0 or 1")
    index = 0
    for b in bits:
        index = (index << 1) | b
    amps = np.zeros(1 << len(bits), dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    """Joint state with a's qubits ahead of b's: amplitude (i,j) = a_i * b_j."""
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def apply_matrix(amplitudes: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Raw (possibly non-unitary) operator application on target qubits.

    Returns an unnormalized amplitude array; callers renormalize when the
    operator is a projector.
    """
    k = len(targets)
    psi = amplitudes.reshape([2] * n)
    psi = np.moveaxis(psi, targets, range(k))
    psi = matrix @ psi.reshape(1 << k, -1)
    psi = np.moveaxis(psi.reshape([2] * n), range(k), targets)
    return psi.reshape(-1)


def apply_unitary(state: StateVector, u: UnitaryMatrix, targets: Sequence[int]) -> StateVector:
    """Apply u on the target subspace, identity elsewhere; norm is preserved."""
    n = state.qubit_count
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ContractViolationError("target qubits must be distinct")
    if any(t < 0 or t >= n for t in targets):
        raise ContractViolationError(f"target out of range for {n} qubits")
    if u.dimension != 1 << len(targets):
        raise ContractViolationError(
            f"unitary dimension {u.dimension} does not match {len(targets)} target qubits"
        )
    return StateVector(apply_matrix(state.amplitudes, u.entries, targets, n))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with conjugation on a."""
    if a.qubit_count != b.qubit_count:
        raise ContractViolationError("states act on different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 — global-phase-insensitive overlap."""
    return abs(inner_product(a, b)) ** 2


def projective_measure(state: StateVector, ps: ProjectorSet, rng: RandomSource) -> tuple[str, StateVector]:
    """Sample one outcome by the Born rule and collapse onto its projector."""
    probs = ps.probabilities(state)
    if probs.max() < 1e-12:
        raise NumericalDegeneracyError("all outcome probabilities are numerically zero")
    draw = rng.random() * probs.sum()
    acc = 0.0
    index = len(probs) - 1
    for i, p in enumerate(probs):
        acc += p
        if draw < acc:
            index = i
            break
    post = ps.projectors[index] @ state.amplitudes
    return ps.labels[index], StateVector(post / np.linalg.norm(post))


def gram_schmidt_complete(vectors: Sequence[StateVector], dim: int) -> list[StateVector]:
    """Extend the given independent vectors to an orthonormal basis of `dim`.

    Completion candidates are the computational basis kets in index order,
    which makes the result deterministic. Inputs that are linearly
    dependent raise; dependent candidates are skipped.
    """
    basis: list[np.ndarray] = []

    def residual(v: np.ndarray) -> np.ndarray:
        w = v.astype(np.complex128).copy()
        for b in basis:  # two passes for numerical stability
            w -= np.vdot(b, w) * b
        for b in basis:
            w -= np.vdot(b, w) * b
        return w

    for v in vectors:
        if v.amplitudes.size != dim:
            raise ContractViolationError("input vector dimension mismatch")
        w = residual(v.amplitudes)
        norm = np.linalg.norm(w)
        if norm < 1e-8:
            raise ContractViolationError("input vectors are linearly dependent")
        basis.append(w / norm)
    for j in range(dim):
        if len(basis) == dim:
            break
        e = np.zeros(dim, dtype=np.complex128)
        e[j] = 1.0
        w = residual(e)
        norm = np.linalg.norm(w)
        if norm >= 1e-8:
            basis.append(w / norm)
    if len(basis) != dim:
        raise ContractViolationError("failed to complete an orthonormal basis")
    return [StateVector(b) for b in basis]


def random_unitary(dim: int, rng: RandomSource) -> UnitaryMatrix:
    """Haar-distributed unitary via QR with phase normalization."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return UnitaryMatrix(q)


def projector_onto(state: StateVector) -> np.ndarray:
    """Rank-1 projector |v><v|."""
    v = state.amplitudes
    return np.outer(v, v.conj())

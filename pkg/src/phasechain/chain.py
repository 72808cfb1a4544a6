"""Two-branch entangled chain: construction, validation, tampering.

An honest chain is always a superposition of one branch label and its
bitwise complement, with the cumulative scheduled phase on the complement
branch. That symbolic form is what fuse_block maintains; realize() turns
it into an explicit state vector, and brute_force_chain_state() rebuilds
the same state the long way (tensor products plus fusion projections) so
the shortcut can be checked against dense linear algebra.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .blocks import BlockEncoding, PhaseSchedule, block_state
from .errors import (
    ContractViolationError,
    GenesisConstraintError,
    OracleScaleError,
    ScheduleViolationError,
    SequencingError,
    TemporalAccessError,
)
from .quantum import (
    MAX_QUBITS,
    PAULI_X,
    PAULI_Z,
    ProjectorSet,
    RandomSource,
    StateVector,
    UnitaryMatrix,
    apply_matrix,
    apply_unitary,
    basis_ket,
    phase_gate,
    projective_measure,
    projector_onto,
)

PHASE_REL_TOL = 1e-12


class ChainMode(enum.Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


class ValidityOutcome(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    OTHER = "other"


@dataclass(frozen=True)
class ValidityVerdict:
    """Result of one validity measurement; only PLUS certifies the chain."""

    outcome: ValidityOutcome
    valid: bool
    post_chain: "ChainState"

    def __post_init__(self) -> None:
        if self.valid != (self.outcome is ValidityOutcome.PLUS):
            raise ContractViolationError("valid flag must mirror the PLUS outcome")


class TamperKind(enum.Enum):
    MEASURE_QUBIT = "measure-qubit"
    PHASE_SHIFT = "phase-shift"
    LOCAL_UNITARY = "local-unitary"


@dataclass(frozen=True)
class TamperOp:
    """Single-qubit interference with a chain copy."""

    kind: TamperKind
    target: int
    delta: float = 0.0
    u: UnitaryMatrix | None = None

    def __post_init__(self) -> None:
        if self.target < 0:
            raise ContractViolationError("target qubit must be >= 0")
        if self.kind is TamperKind.LOCAL_UNITARY:
            if self.u is None or self.u.dimension != 2:
                raise ContractViolationError("local-unitary tamper needs a 2x2 unitary")


@dataclass(frozen=True)
class ChainState:
    """Chain of blocks; symbolic two-branch form until tampered/obfuscated.

    Branch 0 is 0 r1_2 r2_1 r2_2 ... ; branch 1 its complement, carrying
    sign * e^{i Theta}. The genesis constraint pins sign to +1. Temporal
    chains keep only the final qubit physically present.
    """

    mode: ChainMode
    schedule: PhaseSchedule
    blocks: tuple[BlockEncoding, ...]
    tampered: bool = False
    obfuscated: bool = False
    explicit_state: StateVector | None = None

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ContractViolationError("chain must hold at least one block")
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def qubit_count(self) -> int:
        return 2 * len(self.blocks)

    @property
    def sign(self) -> int:
        return -1 if self.blocks[0].r1 else 1

    @property
    def cumulative_phase(self) -> float:
        return self.schedule.cumulative_phase(self.block_count)

    @property
    def branch0_label(self) -> str:
        head = f"0{self.blocks[0].r2}"
        return head + "".join(b.pair for b in self.blocks[1:])

    @property
    def branch1_label(self) -> str:
        return "".join("1" if c == "0" else "0" for c in self.branch0_label)

    @property
    def timestamps(self) -> tuple[int, ...]:
        """Absorption tick of each qubit in units of the generation interval."""
        ticks: list[int] = []
        for i in range(1, self.block_count + 1):
            ticks.extend((i - 1, i))
        return tuple(ticks)

    @property
    def absorbed_count(self) -> int:
        return self.qubit_count - 1 if self.mode is ChainMode.TEMPORAL else 0

    @property
    def last_qubit(self) -> int:
        return self.qubit_count - 1

    @property
    def strings(self) -> tuple[str, ...]:
        return tuple(b.pair for b in self.blocks)


def _check_schedule_phase(schedule: PhaseSchedule, enc: BlockEncoding) -> None:
    expected = schedule.phase_at(enc.index)
    if not math.isclose(enc.theta, expected, rel_tol=PHASE_REL_TOL, abs_tol=0.0):
        raise ScheduleViolationError(
            f"block {enc.index} carries phase {enc.theta:.12g}, schedule fixes {expected:.12g}"
        )


def genesis_chain(enc: BlockEncoding, mode: ChainMode, schedule: PhaseSchedule) -> ChainState:
    """Single-block chain; the genesis pair must start with 0."""
    if enc.index != 1:
        raise ContractViolationError("genesis block must have index 1")
    if enc.r1 != 0:
        raise GenesisConstraintError("genesis bit pair must be 00 or 01")
    _check_schedule_phase(schedule, enc)
    return ChainState(mode=mode, schedule=schedule, blocks=(enc,))


def fuse_block(chain: ChainState, enc: BlockEncoding) -> ChainState:
    """Append a block: branch labels grow by its pair, Theta by its phase."""
    if chain.tampered or chain.obfuscated or chain.explicit_state is not None:
        raise ContractViolationError("can only fuse onto a pristine symbolic chain")
    if enc.index != chain.block_count + 1:
        raise SequencingError(
            f"expected block index {chain.block_count + 1}, got {enc.index}"
        )
    _check_schedule_phase(chain.schedule, enc)
    fused = replace(chain, blocks=chain.blocks + (enc,))
    if fused.cumulative_phase >= math.pi / 2:
        raise ScheduleViolationError("cumulative phase reached pi/2")  # unreachable under a valid schedule
    return fused


def realize(chain: ChainState) -> StateVector:
    """Explicit state vector of the chain.

    Spatial: (|branch0> + e^{i Theta} |branch1>)/sqrt(2) on 2m qubits.
    Temporal: the single surviving qubit (|b> + e^{i Theta} |b~>)/sqrt(2)
    where b is the last branch-0 bit.
    """
    if chain.explicit_state is not None:
        return chain.explicit_state
    theta = chain.cumulative_phase
    if chain.mode is ChainMode.TEMPORAL:
        b = int(chain.branch0_label[-1])
        amps = np.zeros(2, dtype=np.complex128)
        amps[b] = 1.0 / math.sqrt(2)
        amps[1 - b] = np.exp(1j * theta) / math.sqrt(2)
        return StateVector(amps)
    n = chain.qubit_count
    if n > MAX_QUBITS:
        raise OracleScaleError(f"spatial chain needs {n} qubits; supported maximum is {MAX_QUBITS}")
    idx0 = int(chain.branch0_label, 2)
    idx1 = (1 << n) - 1 - idx0
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[idx0] = 1.0 / math.sqrt(2)
    amps[idx1] = np.exp(1j * theta) / math.sqrt(2)
    return StateVector(amps)


def _two_branch_state(branch0: str, phase: float) -> StateVector:
    n = len(branch0)
    idx0 = int(branch0, 2)
    idx1 = (1 << n) - 1 - idx0
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[idx0] = 1.0 / math.sqrt(2)
    amps[idx1] = np.exp(1j * phase) / math.sqrt(2)
    return StateVector(amps)


def validity_basis(
    blocks: Sequence[BlockEncoding],
    schedule: PhaseSchedule,
    mode: ChainMode = ChainMode.SPATIAL,
) -> ProjectorSet:
    """Measurement family a verifier builds from public knowledge.

    PLUS projects onto the expected chain state with theta_expected summed
    from the schedule, MINUS onto its opposite-phase partner, OTHER onto
    everything else. Temporal chains reduce to the final qubit, where PLUS
    and MINUS already exhaust the space. Results are cached: the family
    depends only on hashable public data and its matrices are read-only.
    """
    return _validity_basis_cached(tuple(blocks), schedule, mode)


@lru_cache(maxsize=64)
def _validity_basis_cached(
    blocks: tuple[BlockEncoding, ...],
    schedule: PhaseSchedule,
    mode: ChainMode,
) -> ProjectorSet:
    if not blocks:
        raise ContractViolationError("validity basis needs at least one block")
    theta_expected = schedule.cumulative_phase(len(blocks))
    probe = ChainState(mode=ChainMode.SPATIAL, schedule=schedule, blocks=blocks)
    branch0 = probe.branch0_label if mode is ChainMode.SPATIAL else probe.branch0_label[-1]
    plus = _two_branch_state(branch0, theta_expected)
    minus = _two_branch_state(branch0, theta_expected + math.pi)
    p_plus = projector_onto(plus)
    p_minus = projector_onto(minus)
    dim = plus.amplitudes.size
    if dim == 2:
        return ProjectorSet((p_plus, p_minus), (ValidityOutcome.PLUS.value, ValidityOutcome.MINUS.value))
    other = np.eye(dim) - p_plus - p_minus
    return ProjectorSet(
        (p_plus, p_minus, other),
        (ValidityOutcome.PLUS.value, ValidityOutcome.MINUS.value, ValidityOutcome.OTHER.value),
    )


def check_validity(
    chain: ChainState,
    rng: RandomSource,
    strings: Sequence[str] | None = None,
) -> ValidityVerdict:
    """One projective validity measurement against the verifier's basis.

    `strings` defaults to the chain's recorded bit pairs; passing them
    explicitly models a verifier with independent knowledge. The collapsed
    chain is returned on the verdict.
    """
    blocks = chain.blocks
    if strings is not None:
        if len(strings) != chain.block_count:
            raise ContractViolationError("verifier string count must match chain length")
        blocks = tuple(
            BlockEncoding(index=i + 1, r1=int(s[0]), r2=int(s[1]), theta=chain.schedule.phase_at(i + 1))
            for i, s in enumerate(strings)
        )
    basis = validity_basis(blocks, chain.schedule, chain.mode)
    label, post = projective_measure(realize(chain), basis, rng)
    outcome = ValidityOutcome(label)
    post_chain = replace(chain, explicit_state=post)
    return ValidityVerdict(outcome=outcome, valid=outcome is ValidityOutcome.PLUS, post_chain=post_chain)


def _tamper_target_qubit(chain: ChainState, target: int) -> int:
    """Resolve a chain qubit index to an index into realize(chain)."""
    if target >= chain.qubit_count:
        raise ContractViolationError(f"target {target} out of range for {chain.qubit_count} qubits")
    if chain.mode is ChainMode.TEMPORAL:
        if target != chain.last_qubit:
            raise TemporalAccessError(
                f"qubit {target} was absorbed at tick {chain.timestamps[target]};"
                f" only qubit {chain.last_qubit} still exists"
            )
        return 0
    return target


def apply_tamper(chain: ChainState, op: TamperOp, rng: RandomSource) -> ChainState:
    """Interfere with one qubit; the result leaves the symbolic family.

    Measure collapses the target in the computational basis (outcome drawn
    from the marginal), phase-shift kicks diag(1, e^{i delta}), and
    local-unitary applies the supplied matrix.
    """
    local = _tamper_target_qubit(chain, op.target)
    state = realize(chain)
    n = state.qubit_count
    if op.kind is TamperKind.PHASE_SHIFT:
        new_state = apply_unitary(state, phase_gate(op.delta), [local])
    elif op.kind is TamperKind.LOCAL_UNITARY:
        new_state = apply_unitary(state, op.u, [local])
    else:
        amps = state.amplitudes.reshape([2] * n)
        marginal_one = float(np.sum(np.abs(np.take(amps, 1, axis=local)) ** 2))
        outcome = 1 if rng.random() < marginal_one else 0
        keep = np.zeros((2, 2), dtype=np.complex128)
        keep[outcome, outcome] = 1.0
        collapsed = apply_matrix(state.amplitudes, keep, [local], n)
        new_state = StateVector(collapsed / np.linalg.norm(collapsed))
    return replace(chain, tampered=True, explicit_state=new_state)


def reconstruct(
    schedule: PhaseSchedule,
    strings: Sequence[str],
    mode: ChainMode = ChainMode.SPATIAL,
) -> ChainState:
    """Rebuild the honest chain from public parameters by replaying fusion."""
    if not strings:
        raise ContractViolationError("cannot reconstruct from an empty string list")
    first = strings[0]
    chain = genesis_chain(
        BlockEncoding(index=1, r1=int(first[0]), r2=int(first[1]), theta=schedule.phase_at(1)),
        mode,
        schedule,
    )
    for i, pair in enumerate(strings[1:], start=2):
        chain = fuse_block(
            chain, BlockEncoding(index=i, r1=int(pair[0]), r2=int(pair[1]), theta=schedule.phase_at(i))
        )
    return chain


def _local_ops_targets(chain: ChainState, ops: Sequence[tuple[int, UnitaryMatrix]]) -> list[int]:
    return [_tamper_target_qubit(chain, qubit) for qubit, _ in ops]


def obfuscate(chain: ChainState, ops: Sequence[tuple[int, UnitaryMatrix]]) -> ChainState:
    """Dress the chain with local unitaries to hide its state from readers."""
    targets = _local_ops_targets(chain, ops)
    state = realize(chain)
    for local, (_, u) in zip(targets, ops):
        state = apply_unitary(state, u, [local])
    return replace(chain, obfuscated=True, explicit_state=state)


def deobfuscate(chain: ChainState, ops: Sequence[tuple[int, UnitaryMatrix]]) -> ChainState:
    """Undo obfuscate by applying the inverses in reverse order."""
    targets = _local_ops_targets(chain, ops)
    state = realize(chain)
    for local, (_, u) in zip(reversed(targets), reversed(ops)):
        state = apply_unitary(state, u.adjoint(), [local])
    return replace(chain, obfuscated=False, explicit_state=state)


_FUSE_KEEP = np.diag([1.0, 0.0, 0.0, 1.0]).astype(np.complex128)


def brute_force_chain_state(blocks: Sequence[BlockEncoding]) -> StateVector:
    """Oracle construction: tensor each block state, then project-fuse.

    Fusion keeps the components where the leading qubits of chain and new
    block agree (a parity projection), then applies the Z/X feed-forward
    correction on the block's first qubit when its r1 bit is set. No
    branch-label bookkeeping is used, so this path is independent of the
    symbolic concatenation in fuse_block.
    """
    blocks = tuple(blocks)
    if not blocks:
        raise ContractViolationError("oracle needs at least one block")
    if blocks[0].r1 != 0:
        raise GenesisConstraintError("genesis bit pair must be 00 or 01")
    state = block_state(blocks[0])
    for enc in blocks[1:]:
        joint = np.kron(state.amplitudes, block_state(enc).amplitudes)
        n = state.qubit_count + 2
        kept = apply_matrix(joint, _FUSE_KEEP, [0, n - 2], n)
        if enc.r1:
            kept = apply_matrix(kept, PAULI_Z.entries, [n - 2], n)
            kept = apply_matrix(kept, PAULI_X.entries, [n - 2], n)
        norm = np.linalg.norm(kept)
        if norm < 1e-12:
            raise ContractViolationError("fusion projection annihilated the state")
        state = StateVector(kept / norm)
    return state

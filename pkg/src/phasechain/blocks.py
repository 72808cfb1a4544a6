"""Classical-to-quantum block encoding.

A block's classical face is a 2-bit string plus a phase fixed in advance
by the network's decaying schedule. The 2-bit payload goes through a
per-index secret permutation (the codec), and the quantum block is a Bell
pair with the scheduled phase planted on its leading-one branch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    BudgetError,
    CapacityError,
    ContractViolationError,
    GenesisConstraintError,
    UnknownIndexError,
)
from .quantum import CNOT, HADAMARD, PAULI_X, PAULI_Z, StateVector, UnitaryMatrix, apply_unitary, basis_ket

HALF_PI = math.pi / 2

BIT_PAIRS = ("00", "01", "10", "11")

CODEC_FORMAT = "block-codec/1"


@dataclass(frozen=True)
class PhaseSchedule:
    """Decaying phase rule theta_i = theta1 / ratio**(i-1).

    The opening phase must keep the infinite sum theta1 * ratio/(ratio-1)
    strictly below pi/2, i.e. theta1 < (pi/2) * (ratio-1)/ratio.
    """

    theta1: float
    ratio: int

    def __post_init__(self) -> None:
        if int(self.ratio) != self.ratio or self.ratio < 2:
            raise ContractViolationError("ratio must be an integer >= 2")
        bound = HALF_PI * (self.ratio - 1) / self.ratio
        if not 0.0 < self.theta1 < bound:
            raise BudgetError(
                f"theta1 must lie in (0, {bound:.12g}) for ratio {self.ratio}; got {self.theta1:.12g}"
            )

    def phase_at(self, i: int) -> float:
        """Exact closed-form phase of block i (1-based)."""
        if i < 1:
            raise ContractViolationError("block index must be >= 1")
        return self.theta1 / self.ratio ** (i - 1)

    def phase_budget(self) -> float:
        """Limit of the infinite phase sum, strictly below pi/2."""
        return self.theta1 * self.ratio / (self.ratio - 1)

    def cumulative_phase(self, m: int) -> float:
        """Closed-form partial sum of the first m phases (avoids drift)."""
        if m < 0:
            raise ContractViolationError("block count must be >= 0")
        return self.phase_budget() * (1.0 - float(self.ratio) ** -m)


def _check_pair(bits: str, what: str) -> str:
    if not isinstance(bits, str) or bits not in BIT_PAIRS:
        raise CapacityError(f"{what} must be one of {BIT_PAIRS}; got {bits!r}")
    return bits


@dataclass(frozen=True)
class BlockCodec:
    """Per-index secret permutations of 2-bit strings.

    tables[i][v] is the wire pair for payload value v at block index i
    when encode_direction is True; the inverse map decodes.
    """

    tables: Mapping[int, tuple[str, str, str, str]]
    encode_direction: bool = True

    def __post_init__(self) -> None:
        fixed: dict[int, tuple[str, str, str, str]] = {}
        for index, table in dict(self.tables).items():
            table = tuple(table)
            if sorted(table) != sorted(BIT_PAIRS):
                raise ContractViolationError(f"table for index {index} is not a permutation of {BIT_PAIRS}")
            fixed[int(index)] = table
        object.__setattr__(self, "tables", fixed)

    def _table(self, index: int) -> tuple[str, str, str, str]:
        try:
            return self.tables[index]
        except KeyError:
            raise UnknownIndexError(f"codec has no permutation for block index {index}") from None

    def encode(self, index: int, payload: str) -> str:
        payload = _check_pair(payload, "payload")
        table = self._table(index)
        pos = BIT_PAIRS.index(payload)
        return table[pos] if self.encode_direction else BIT_PAIRS[table.index(payload)]

    def decode(self, index: int, pair: str) -> str:
        pair = _check_pair(pair, "bit pair")
        table = self._table(index)
        return BIT_PAIRS[table.index(pair)] if self.encode_direction else table[BIT_PAIRS.index(pair)]

    @staticmethod
    def identity(max_index: int) -> "BlockCodec":
        return BlockCodec({i: BIT_PAIRS for i in range(1, max_index + 1)})

    @staticmethod
    def random(rng, max_index: int) -> "BlockCodec":
        """Fresh secret permutation per index; two payloads always map to r1 = 0."""
        tables = {}
        for i in range(1, max_index + 1):
            order = rng.permutation(4)
            tables[i] = tuple(BIT_PAIRS[j] for j in order)
        return BlockCodec(tables)

    def to_json(self) -> str:
        doc = {
            "format": CODEC_FORMAT,
            "encode_direction": self.encode_direction,
            "tables": {str(i): list(t) for i, t in sorted(self.tables.items())},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "BlockCodec":
        doc = json.loads(text)
        if doc.get("format") != CODEC_FORMAT:
            raise ContractViolationError(f"unsupported codec format tag: {doc.get('format')!r}")
        tables = {int(i): tuple(t) for i, t in doc["tables"].items()}
        return BlockCodec(tables, encode_direction=bool(doc.get("encode_direction", True)))


@dataclass(frozen=True)
class BlockEncoding:
    """One block's classical face: index, bit pair, and scheduled phase."""

    index: int
    r1: int
    r2: int
    theta: float

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ContractViolationError("block index must be >= 1")
        if self.r1 not in (0, 1) or self.r2 not in (0, 1):
            raise ContractViolationError("r1 and r2 must be bits")
        if self.index == 1 and self.r1 == 1:
            raise GenesisConstraintError("genesis bit pair must be 00 or 01 (r1 = 0)")

    @property
    def pair(self) -> str:
        return f"{self.r1}{self.r2}"


def encode_block(codec: BlockCodec, schedule: PhaseSchedule, payload: str, i: int) -> BlockEncoding:
    """Map a 2-bit payload through the index-i permutation onto the schedule."""
    wire = codec.encode(i, payload)
    r1, r2 = int(wire[0]), int(wire[1])
    if i == 1 and r1 == 1:
        raise GenesisConstraintError(
            f"payload {payload!r} maps to genesis pair {wire!r}; the genesis pair must start with 0"
        )
    return BlockEncoding(index=i, r1=r1, r2=r2, theta=schedule.phase_at(i))


def decode_block(codec: BlockCodec, enc: BlockEncoding) -> str:
    """Inverse of encode_block for the same codec."""
    return codec.decode(enc.index, enc.pair)


def rotation_for(enc: BlockEncoding) -> UnitaryMatrix:
    """Diagonal phase rotation that plants e^{i theta} on the |1 r2~> branch.

    For pairs 00 and 10 the phase sits on |11>; for 01 and 11 on |10>.
    """
    phase = np.exp(1j * enc.theta)
    diag = [1.0, 1.0, 1.0, phase] if enc.r2 == 0 else [1.0, 1.0, phase, 1.0]
    return UnitaryMatrix(np.diag(diag))


def block_state(enc: BlockEncoding) -> StateVector:
    """Two-qubit block state (|0 r2> + e^{i theta} (-1)^{r1} |1 r2~>)/sqrt(2).

    Built operationally: Bell pair from |00>, bit/sign dressing, then the
    scheduled rotation.
    """
    state = basis_ket([0, 0])
    state = apply_unitary(state, HADAMARD, [0])
    state = apply_unitary(state, CNOT, [0, 1])
    if enc.r2:
        state = apply_unitary(state, PAULI_X, [1])
    if enc.r1:
        state = apply_unitary(state, PAULI_Z, [0])
    return apply_unitary(state, rotation_for(enc), [0, 1])

"""Scenario configuration schema.

One pydantic model per CLI command / service endpoint; every module
invariant that can be checked statically (phase budget, node counts, copy
counts) is enforced here so bad configs die at the boundary with
field-level messages.
"""
from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .blocks import BIT_PAIRS, PhaseSchedule
from .errors import BudgetError, ConstraintError

BitPair = Literal["00", "01", "10", "11"]

ATTACK_KINDS = ("measure-qubit", "phase-shift", "local-unitary")
CREATOR_STRATEGIES = (
    "honest",
    "wrong-phase-all",
    "wrong-phase-subset",
    "different-strings",
    "state-string-mismatch",
)


class AttackSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["measure-qubit", "phase-shift", "local-unitary"]
    target: int = Field(ge=0)
    delta: float = 0.0


class CreatorStrategySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal[
        "honest",
        "wrong-phase-all",
        "wrong-phase-subset",
        "different-strings",
        "state-string-mismatch",
    ] = "honest"
    delta: float = 0.0
    targets: tuple[int, ...] = ()

    @model_validator(mode="after")
    def _check_parameters(self) -> "CreatorStrategySpec":
        if self.kind in ("wrong-phase-all", "wrong-phase-subset") and self.delta == 0.0:
            raise ValueError(f"strategy {self.kind!r} needs a nonzero delta")
        if self.kind in ("wrong-phase-subset", "different-strings") and not self.targets:
            raise ValueError(f"strategy {self.kind!r} needs a nonempty target node list")
        return self


class AdversarySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    creator_strategy: CreatorStrategySpec = CreatorStrategySpec()
    dishonest_validators: tuple[int, ...] = ()


class ScenarioBase(BaseModel):
    """Fields every scenario shares: the schedule and the master seed."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    theta1: float = Field(gt=0)
    n: int = Field(ge=2, description="schedule decay ratio")
    seed: int = Field(default=0, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_budget(self) -> "ScenarioBase":
        try:
            PhaseSchedule(self.theta1, self.n)
        except BudgetError as err:
            raise ValueError(str(err)) from None
        return self

    def phase_schedule(self) -> PhaseSchedule:
        return PhaseSchedule(self.theta1, self.n)


class EncodeScenario(ScenarioBase):
    payloads: tuple[BitPair, ...] = Field(min_length=1)
    codec_out: Optional[str] = None
    codec_path: Optional[str] = None


class ChainBuildScenario(ScenarioBase):
    payloads: tuple[BitPair, ...] = Field(min_length=1)
    mode: Literal["spatial", "temporal"] = "spatial"
    codec_path: Optional[str] = None


class ChainValidateScenario(BaseModel):
    model_config = ConfigDict(frozen=True, extra="ignore")

    snapshot: Optional[dict] = None
    snapshot_path: Optional[str] = None
    trials: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_source(self) -> "ChainValidateScenario":
        if self.snapshot is None and self.snapshot_path is None:
            raise ValueError("either snapshot or snapshot_path is required")
        return self


class AttackScenario(ChainBuildScenario):
    attack: AttackSpec
    trials: int = Field(ge=1)


class ConsensusScenario(ScenarioBase):
    nodes: int = Field(ge=3)
    k: int = Field(ge=2, description="copies delivered per validator; k-1 are measured")
    trials: int = Field(ge=1)
    chain_length: int = Field(default=1, ge=1)
    payloads: tuple[BitPair, ...] = ()
    creator: Optional[int] = Field(default=None, ge=0)
    adversary: AdversarySpec = AdversarySpec()
    events: bool = False

    @model_validator(mode="after")
    def _check_network(self) -> "ConsensusScenario":
        if self.creator is not None and self.creator >= self.nodes:
            raise ValueError(f"creator id {self.creator} out of range for {self.nodes} nodes")
        bad = [i for i in self.adversary.dishonest_validators if i < 0 or i >= self.nodes]
        if bad:
            raise ValueError(f"dishonest validator ids out of range: {bad}")
        if len(set(self.adversary.dishonest_validators)) >= self.nodes:
            raise ValueError("dishonest validators must be fewer than the node count")
        for target in self.adversary.creator_strategy.targets:
            if target < 0 or target >= self.nodes:
                raise ValueError(f"strategy target id {target} out of range for {self.nodes} nodes")
        if self.payloads and self.payloads[0] not in ("00", "01"):
            raise ValueError("first payload pair must be 00 or 01 (genesis constraint)")
        return self

    @property
    def prefix_length(self) -> int:
        return len(self.payloads) if self.payloads else self.chain_length


COMMAND_MODELS: dict[str, type[BaseModel]] = {
    "encode": EncodeScenario,
    "chain-build": ChainBuildScenario,
    "chain-validate": ChainValidateScenario,
    "attack": AttackScenario,
    "consensus": ConsensusScenario,
}


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{loc}: {item['msg']}")
    return "\n".join(lines)


def parse_config(text: str, command: str):
    """Parse and validate a JSON config for the given command.

    Raises ConstraintError with a field-level message on any schema or
    budget violation.
    """
    if command not in COMMAND_MODELS:
        raise ConstraintError(f"unknown command {command!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConstraintError(f"config is not valid JSON: {err}") from None
    try:
        return COMMAND_MODELS[command].model_validate(raw)
    except ValidationError as err:
        raise ConstraintError(format_validation_error(err)) from None

"""Round-based consensus simulation over a simulated node network.

A round is a fixed deterministic schedule: creator selection, copy
distribution, per-validator measurement validation, classical
cross-comparison, final verdicts, majority tally, then local appends.
Classical channels are modeled as authenticated; the adversary acts only
through the creator strategy and lying validators. Measurement reports
are always truthful (the simulator enforces the pass/outcome invariant);
a lying validator lies at the final-verdict stage by negating its vote.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .blocks import BlockEncoding, PhaseSchedule, block_state
from .chain import ChainMode, ChainState, fuse_block, reconstruct
from .config import ConsensusScenario, CreatorStrategySpec
from .errors import ContractViolationError
from .quantum import (
    ProjectorSet,
    RandomSource,
    StateVector,
    gram_schmidt_complete,
    projective_measure,
    projector_onto,
)

EmitFn = Callable[[dict], None]

PLUS = "plus"
MINUS = "minus"
OTHER = "other"


class Judgment(enum.Enum):
    CREATOR_HONEST = "creator-honest"
    CREATOR_DISHONEST = "creator-dishonest"


@dataclass(frozen=True)
class NodeProfile:
    """One simulated node: identity, honesty, and its local ledger."""

    id: int
    honest: bool
    local_chain: ChainState
    stored_strings: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.stored_strings) != self.local_chain.block_count:
            raise ContractViolationError("stored strings must match local chain length")


@dataclass(frozen=True)
class Delivery:
    """What one validator receives: k state copies plus the classical pair."""

    copies: tuple[StateVector, ...]
    string: str


@dataclass(frozen=True)
class Proposal:
    creator: int
    block_index: int
    deliveries: Mapping[int, Delivery]

    def __post_init__(self) -> None:
        sizes = {len(d.copies) for d in self.deliveries.values()}
        if len(sizes) > 1:
            raise ContractViolationError("all validators must receive the same copy count")


@dataclass(frozen=True)
class MeasurementReport:
    """Truthful record of one validator's k-1 validation measurements."""

    node_id: int
    outcomes: tuple[str, ...]
    passed: bool
    received_string: str
    judgment: Judgment

    def __post_init__(self) -> None:
        if self.passed != all(o == PLUS for o in self.outcomes):
            raise ContractViolationError("pass flag must mirror the outcomes")
        expected = Judgment.CREATOR_HONEST if self.passed else Judgment.CREATOR_DISHONEST
        if self.judgment is not expected:
            raise ContractViolationError("judgment must follow from the pass flag")


@dataclass(frozen=True)
class Inconsistency:
    kind: str  # string-disagreement | pass-disagreement
    nodes: frozenset[int]


@dataclass(frozen=True)
class Verdict:
    node_id: int
    admissible: bool


@dataclass(frozen=True)
class RoundOutcome:
    admissible: bool
    blacklist: frozenset[int]
    reports: tuple[MeasurementReport, ...]
    ground_truth_honest: bool
    verdicts: tuple[Verdict, ...]
    inconsistencies: tuple[Inconsistency, ...]
    creator: int
    honest_ids: frozenset[int]
    chains: Mapping[int, ChainState]
    copies_delivered: int
    copies_consumed: int
    copies_retained: int


def select_creator(rng: RandomSource, node_count: int) -> int:
    """Uniform creator choice, reproducible under the stream's seed."""
    if node_count < 1:
        raise ContractViolationError("need at least one node")
    return rng.integers(node_count)


@lru_cache(maxsize=512)
def block_validity_basis(string: str, schedule: PhaseSchedule, block_index: int) -> ProjectorSet:
    """Validator-side measurement family for one delivered block copy.

    Plus/minus states come from the received pair and the schedule phase
    for this index; the rest of the space is completed deterministically
    by Gram-Schmidt over computational kets. Cached: inputs are hashable
    and the projector matrices are immutable.
    """
    r1, r2 = int(string[0]), int(string[1])
    theta_pre = schedule.phase_at(block_index)
    coeff = (-1 if r1 else 1) * np.exp(1j * theta_pre) / math.sqrt(2)
    plus = np.zeros(4, dtype=np.complex128)
    plus[r2] = 1.0 / math.sqrt(2)
    plus[2 + (1 - r2)] = coeff
    minus = np.zeros(4, dtype=np.complex128)
    minus[r2] = 1.0 / math.sqrt(2)
    minus[2 + (1 - r2)] = -coeff
    basis = gram_schmidt_complete([StateVector(plus), StateVector(minus)], 4)
    other = sum(projector_onto(v) for v in basis[2:])
    return ProjectorSet(
        (projector_onto(basis[0]), projector_onto(basis[1]), other),
        (PLUS, MINUS, OTHER),
    )


def make_proposal(
    creator_id: int,
    enc: BlockEncoding,
    k: int,
    strategy: CreatorStrategySpec,
    validators: Sequence[int],
) -> Proposal:
    """Build per-validator deliveries according to the creator strategy."""
    if k < 2:
        raise ContractViolationError("k must be >= 2: one copy to append, the rest to check")
    honest_state = block_state(enc)
    targets = set(strategy.targets)
    shifted_state = None
    if strategy.kind in ("wrong-phase-all", "wrong-phase-subset"):
        shifted_state = block_state(replace(enc, theta=enc.theta + strategy.delta))
    mismatched_state = None
    if strategy.kind == "state-string-mismatch":
        mismatched_state = block_state(replace(enc, r2=1 - enc.r2))

    deliveries: dict[int, Delivery] = {}
    for node in validators:
        state = honest_state
        string = enc.pair
        if strategy.kind == "wrong-phase-all":
            state = shifted_state
        elif strategy.kind == "wrong-phase-subset" and node in targets:
            state = shifted_state
        elif strategy.kind == "different-strings" and node in targets:
            string = f"{enc.r1}{1 - enc.r2}"
        elif strategy.kind == "state-string-mismatch":
            state = mismatched_state
        deliveries[node] = Delivery(copies=(state,) * k, string=string)
    return Proposal(creator=creator_id, block_index=enc.index, deliveries=deliveries)


def validate_copies(
    node_id: int,
    delivery: Delivery,
    schedule: PhaseSchedule,
    block_index: int,
    rng: RandomSource,
) -> MeasurementReport:
    """Measure all but the last copy in the reconstructed basis.

    Identical copies are sampled as independent Born draws in one batch;
    heterogeneous deliveries fall back to one projective measurement per
    copy. The final copy is retained for the append step.
    """
    copies = delivery.copies
    if len(copies) < 2:
        raise ContractViolationError("delivery must hold at least two copies")
    basis = block_validity_basis(delivery.string, schedule, block_index)
    to_measure = copies[:-1]
    if all(c is to_measure[0] for c in to_measure[1:]):
        probs = basis.probabilities(to_measure[0])
        draws = rng.choice(len(probs), size=len(to_measure), p=probs / probs.sum())
        outcomes = tuple(basis.labels[d] for d in draws)
    else:
        outcomes = tuple(projective_measure(c, basis, rng)[0] for c in to_measure)
    passed = all(o == PLUS for o in outcomes)
    judgment = Judgment.CREATOR_HONEST if passed else Judgment.CREATOR_DISHONEST
    return MeasurementReport(
        node_id=node_id,
        outcomes=outcomes,
        passed=passed,
        received_string=delivery.string,
        judgment=judgment,
    )


def cross_compare(reports: Sequence[MeasurementReport]) -> tuple[Inconsistency, ...]:
    """Classical comparison of shared strings and pass/fail judgments."""
    found: list[Inconsistency] = []
    groups: dict[str, set[int]] = {}
    for report in reports:
        groups.setdefault(report.received_string, set()).add(report.node_id)
    if len(groups) > 1:
        majority_string = max(sorted(groups), key=lambda s: (len(groups[s]), s))
        minority = frozenset(
            node for s, nodes in groups.items() if s != majority_string for node in nodes
        )
        found.append(Inconsistency("string-disagreement", minority))
    failed = frozenset(r.node_id for r in reports if not r.passed)
    if failed and len(failed) < len(reports):
        found.append(Inconsistency("pass-disagreement", failed))
    return tuple(found)


def final_verdicts(
    reports: Sequence[MeasurementReport],
    inconsistencies: Sequence[Inconsistency],
    profiles: Sequence[NodeProfile],
    creator_id: int | None = None,
) -> tuple[Verdict, ...]:
    """Admissibility votes: honest nodes need a clean pass and no evidence
    against the creator; liars negate; the creator endorses its own block."""
    clean = not inconsistencies
    by_id = {p.id: p for p in profiles}
    verdicts = []
    for report in reports:
        honest_vote = report.passed and clean
        node = by_id[report.node_id]
        verdicts.append(Verdict(report.node_id, honest_vote if node.honest else not honest_vote))
    if creator_id is not None:
        verdicts.append(Verdict(creator_id, True))
    return tuple(verdicts)


def tally(verdicts: Sequence[Verdict]) -> tuple[bool, frozenset[int]]:
    """Strict majority decides; dissenters are blacklisted; ties reject."""
    if not verdicts:
        raise ContractViolationError("tally needs at least one verdict")
    yes = sum(1 for v in verdicts if v.admissible)
    no = len(verdicts) - yes
    if yes == no:
        return False, frozenset()
    admissible = yes > no
    blacklist = frozenset(v.node_id for v in verdicts if v.admissible != admissible)
    return admissible, blacklist


def _prefix_strings(cfg: ConsensusScenario, rng: RandomSource) -> tuple[str, ...]:
    if cfg.payloads:
        return tuple(cfg.payloads)
    strings = [f"0{rng.integers(2)}"]
    for _ in range(cfg.prefix_length - 1):
        strings.append(f"{rng.integers(2)}{rng.integers(2)}")
    return tuple(strings)


def run_round(
    cfg: ConsensusScenario,
    rng: RandomSource,
    emit: EmitFn | None = None,
) -> RoundOutcome:
    """One full consensus round under the scenario's adversary model."""
    schedule = cfg.phase_schedule()
    creator = cfg.creator if cfg.creator is not None else select_creator(rng, cfg.nodes)
    prefix = _prefix_strings(cfg, rng)
    shared_chain = reconstruct(schedule, prefix, ChainMode.SPATIAL)
    dishonest = set(cfg.adversary.dishonest_validators)
    profiles = tuple(
        NodeProfile(i, honest=i not in dishonest, local_chain=shared_chain, stored_strings=prefix)
        for i in range(cfg.nodes)
    )
    index = shared_chain.block_count + 1
    enc = BlockEncoding(index, rng.integers(2), rng.integers(2), schedule.phase_at(index))
    strategy = cfg.adversary.creator_strategy
    validators = [i for i in range(cfg.nodes) if i != creator]
    proposal = make_proposal(creator, enc, cfg.k, strategy, validators)
    if emit:
        emit({"event": "proposal", "creator": creator, "block_index": index, "strategy": strategy.kind})

    reports = tuple(
        validate_copies(v, proposal.deliveries[v], schedule, index, rng) for v in validators
    )
    if emit:
        for r in reports:
            emit(
                {
                    "event": "measurement",
                    "node": r.node_id,
                    "passed": r.passed,
                    "judgment": r.judgment.value,
                    "string": r.received_string,
                }
            )
    inconsistencies = cross_compare(reports)
    if emit:
        emit(
            {
                "event": "comparison",
                "inconsistencies": [
                    {"kind": inc.kind, "nodes": sorted(inc.nodes)} for inc in inconsistencies
                ],
            }
        )
    verdicts = final_verdicts(reports, inconsistencies, profiles, creator)
    if emit:
        for v in verdicts:
            emit({"event": "verdict", "node": v.node_id, "admissible": v.admissible})
    admissible, blacklist = tally(verdicts)
    if emit:
        emit({"event": "tally", "admissible": admissible, "blacklist": sorted(blacklist)})

    chains: dict[int, ChainState] = {}
    for profile in profiles:
        if not admissible or profile.id in blacklist:
            chains[profile.id] = profile.local_chain
            continue
        if profile.id == creator:
            appended = enc
        else:
            s = proposal.deliveries[profile.id].string
            appended = BlockEncoding(index, int(s[0]), int(s[1]), schedule.phase_at(index))
        chains[profile.id] = fuse_block(profile.local_chain, appended)

    honest_ids = frozenset(p.id for p in profiles if p.honest)
    n_validators = len(validators)
    return RoundOutcome(
        admissible=admissible,
        blacklist=blacklist,
        reports=reports,
        ground_truth_honest=strategy.kind == "honest",
        verdicts=verdicts,
        inconsistencies=inconsistencies,
        creator=creator,
        honest_ids=honest_ids,
        chains=chains,
        copies_delivered=n_validators * cfg.k,
        copies_consumed=n_validators * (cfg.k - 1),
        copies_retained=n_validators,
    )


def _stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else 0.0


def run_trials(
    cfg: ConsensusScenario,
    emit: EmitFn | None = None,
    on_round: Callable[[int, RoundOutcome], None] | None = None,
) -> dict:
    """Independent rounds on derived streams; aggregate detection metrics."""
    admitted = 0
    honest_rounds = 0
    honest_rejected = 0
    dishonest_rounds = 0
    dishonest_admitted = 0
    detector_reports = 0
    detections = 0
    honest_slots = 0
    honest_blacklisted = 0
    liar_slots = 0
    liars_blacklisted = 0

    for t in range(cfg.trials):
        trial_rng = RandomSource(cfg.seed, t)
        trial_emit = None
        if emit is not None:
            def trial_emit(record: dict, _t: int = t) -> None:
                emit({"round": _t, **record})
        outcome = run_round(cfg, trial_rng, trial_emit)
        admitted += outcome.admissible
        if outcome.ground_truth_honest:
            honest_rounds += 1
            honest_rejected += not outcome.admissible
        else:
            dishonest_rounds += 1
            dishonest_admitted += outcome.admissible
            for report in outcome.reports:
                if report.node_id in outcome.honest_ids:
                    detector_reports += 1
                    detections += report.judgment is Judgment.CREATOR_DISHONEST
        honest_slots += len(outcome.honest_ids)
        honest_blacklisted += len(outcome.blacklist & outcome.honest_ids)
        liars = frozenset(range(cfg.nodes)) - outcome.honest_ids
        liar_slots += len(liars)
        liars_blacklisted += len(outcome.blacklist & liars)
        if on_round is not None:
            on_round(t, outcome)

    detection_rate = detections / detector_reports if detector_reports else 0.0
    summary = {
        "trials": cfg.trials,
        "admitted": admitted,
        "admitted_rate": admitted / cfg.trials,
        "false_reject_rate": honest_rejected / honest_rounds if honest_rounds else 0.0,
        "false_accept_rate": dishonest_admitted / dishonest_rounds if dishonest_rounds else 0.0,
        "detection_rate": detection_rate,
        "detection_rate_stderr": _stderr(detection_rate, detector_reports),
        "false_blacklist_rate": honest_blacklisted / honest_slots if honest_slots else 0.0,
        "liar_blacklist_rate": liars_blacklisted / liar_slots if liar_slots else 0.0,
    }
    return summary

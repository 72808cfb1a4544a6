"""Chain snapshot serialization: a versioned, replayable record.

Snapshots carry the public parameters (schedule, bit pairs, mode) plus
derived fields for cross-checking; loading replays genesis+fusion and
verifies the recorded cumulative phase. Tampered or obfuscated chains
left the symbolic family and cannot be serialized in this format.
"""
from __future__ import annotations

import math

from .blocks import PhaseSchedule
from .chain import ChainMode, ChainState, reconstruct
from .errors import ContractViolationError

SNAPSHOT_FORMAT = "chain-snapshot/1"


def chain_to_snapshot(chain: ChainState) -> dict:
    if chain.explicit_state is not None:
        raise ContractViolationError("only pristine symbolic chains can be snapshotted")
    return {
        "format": SNAPSHOT_FORMAT,
        "mode": chain.mode.value,
        "theta1": chain.schedule.theta1,
        "n": chain.schedule.ratio,
        "strings": list(chain.strings),
        "cumulative_phase": chain.cumulative_phase,
        "sign": chain.sign,
        "timestamps": list(chain.timestamps),
        "absorbed_count": chain.absorbed_count,
        "tampered": chain.tampered,
        "obfuscated": chain.obfuscated,
    }


def snapshot_to_chain(doc: dict) -> ChainState:
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise ContractViolationError(f"unsupported snapshot format tag: {doc.get('format')!r}")
    if doc.get("tampered") or doc.get("obfuscated"):
        raise ContractViolationError("snapshot records a non-symbolic chain; reconstruct from strings instead")
    schedule = PhaseSchedule(float(doc["theta1"]), int(doc["n"]))
    chain = reconstruct(schedule, [str(s) for s in doc["strings"]], ChainMode(doc["mode"]))
    recorded = float(doc["cumulative_phase"])
    if not math.isclose(chain.cumulative_phase, recorded, rel_tol=1e-9, abs_tol=1e-12):
        raise ContractViolationError(
            f"snapshot cumulative phase {recorded:.12g} disagrees with replay {chain.cumulative_phase:.12g}"
        )
    return chain

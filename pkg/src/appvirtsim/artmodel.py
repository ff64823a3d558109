"""Runtime compilation model: per-method hotness counters and the detector.

The runtime mirrors each executed method into a record carrying a
compilation mode and a hotness counter. Fully ahead-of-time compiled
methods never tick the counter; under the hybrid compile-plus-interpret
mode the counter advances by one per invocation plus one per recorded
loop iteration.

The observable this model encodes: processes hosting a virtual environment
run framework methods ahead-of-time compiled (counter pinned at 0), while
native execution leaves the counter climbing. The detector flags a virtual
environment when a warmed-up sentinel method still reads zero.
"""

from __future__ import annotations

from dataclasses import dataclass

from .outcomes import ProbeOutcome, Verdict

AOT = "aot"
HYBRID = "hybrid"

NATIVE = "native"
VIRTUAL = "virtual"

# Invocations required before the detector will trust the counter; guards
# against flagging a method that simply never ran.
MIN_INVOCATIONS = 10

DEFAULT_SENTINEL = "ActivityThread.currentActivityThread"

HOTNESS_PROBE_ID = "hotness"


class InsufficientWarmupError(RuntimeError):
    """The sentinel has not been invoked often enough to judge."""


@dataclass
class ArtMethodRecord:
    method_name: str
    compile_mode: str
    hotness_count: int = 0
    invocations: int = 0


class RuntimeModel:
    """Per-process runtime state: one record per executed method."""

    def __init__(self, environment_kind: str):
        if environment_kind not in (NATIVE, VIRTUAL):
            raise ValueError(f"unknown environment kind: {environment_kind!r}")
        self.environment_kind = environment_kind
        self.methods: dict[str, ArtMethodRecord] = {}

    @property
    def default_mode(self) -> str:
        return HYBRID if self.environment_kind == NATIVE else AOT

    def method(self, name: str) -> ArtMethodRecord:
        record = self.methods.get(name)
        if record is None:
            record = ArtMethodRecord(method_name=name, compile_mode=self.default_mode)
            self.methods[name] = record
        return record

    def record_invocation(self, method_name: str, loop_iterations: int = 0) -> None:
        """Count one invocation plus its loop iterations; AoT methods stay at 0."""
        if loop_iterations < 0:
            raise ValueError("loop_iterations must be >= 0")
        record = self.method(method_name)
        record.invocations += 1
        if record.compile_mode == HYBRID:
            record.hotness_count += 1 + loop_iterations


def warm_up(rt: RuntimeModel, method_name: str = DEFAULT_SENTINEL,
            invocations: int = 25, loop_iterations: int = 2) -> None:
    """Drive the sentinel past the warmup threshold, as app startup would."""
    for _ in range(invocations):
        rt.record_invocation(method_name, loop_iterations)


def hotness_check(rt: RuntimeModel, sentinel: str = DEFAULT_SENTINEL) -> ProbeOutcome:
    """Zero hotness on a warmed-up sentinel means the code runs virtualized."""
    record = rt.methods.get(sentinel)
    if record is None or record.invocations < MIN_INVOCATIONS:
        seen = 0 if record is None else record.invocations
        raise InsufficientWarmupError(
            f"{sentinel}: {seen} invocations recorded, need {MIN_INVOCATIONS}"
        )
    if record.hotness_count == 0:
        return ProbeOutcome(
            probe=HOTNESS_PROBE_ID,
            verdict=Verdict.VIRTUAL_DETECTED,
            evidence=(
                f"{sentinel}: hotness_count 0 after {record.invocations} invocations "
                "(ahead-of-time compiled)"
            ),
        )
    return ProbeOutcome(
        probe=HOTNESS_PROBE_ID,
        verdict=Verdict.CLEAN,
        evidence=f"{sentinel}: hotness_count {record.hotness_count} > 0",
    )

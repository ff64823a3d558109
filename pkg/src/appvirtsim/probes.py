"""The detection mechanisms, run as environment-agnostic probes.

Each probe sees only an EnvHandle: the manifest its app believes it
declared plus the system-call surface. Verdicts are computed purely from
call replies, never from simulator internals, so the same probe code runs
unchanged in every environment.

Mechanisms 6 and 16 target behaviors reported as non-functional in
practice; 6 and 18 therefore return inconclusive in every environment
(there is no working variant to model), while 16 stays functional against
a naive container.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from . import artmodel
from .manifest import extract_components
from .outcomes import ProbeOutcome, Verdict
from .permissions import DANGEROUS_PERMISSIONS, STORE_GUARDS
from .simos import (
    AccessDeniedError,
    ApiCall,
    ApiError,
    ComponentNotRegisteredError,
    PackageNotFoundError,
    PermissionDeniedError,
    StaticReceiverError,
)
from .worlds import ENVIRONMENTS, EnvHandle, MatrixScenario, WORLD_BUILDERS, World

PROBE_IDS = tuple(str(n) for n in range(1, 19)) + (artmodel.HOTNESS_PROBE_ID,)


@dataclass
class DetectionReport:
    """All verdicts for one environment."""

    environment: str
    outcomes: list[ProbeOutcome] = field(default_factory=list)

    def verdicts(self) -> dict[str, str]:
        return {o.probe: o.verdict.value for o in self.outcomes}

    def summary(self) -> dict[str, int]:
        counts = {v.value: 0 for v in Verdict}
        for outcome in self.outcomes:
            counts[outcome.verdict.value] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "environment": self.environment,
            "outcomes": [
                {"probe": o.probe, "verdict": o.verdict.value, "evidence": o.evidence}
                for o in self.outcomes
            ],
            "summary": self.summary(),
        }


def _detected(evidence: str) -> tuple[Verdict, str]:
    return Verdict.VIRTUAL_DETECTED, evidence


def _clean(evidence: str) -> tuple[Verdict, str]:
    return Verdict.CLEAN, evidence


def _inconclusive(evidence: str) -> tuple[Verdict, str]:
    return Verdict.INCONCLUSIVE, evidence


def _probe_1(h: EnvHandle):
    """Reach for stores whose guarding permission the app never declared."""
    undeclared = [
        (store, guard) for store, guard in sorted(STORE_GUARDS.items())
        if guard not in h.declared.permissions
    ]
    if not undeclared:
        return _clean("every store guard is declared; nothing to over-reach")
    reachable = []
    for store, guard in undeclared:
        try:
            h.call(ApiCall("access_resource", store=store))
            reachable.append(store)
        except PermissionDeniedError:
            pass
    if reachable:
        return _detected(
            f"accessed undeclared stores: {', '.join(reachable)}"
        )
    return _clean(f"all {len(undeclared)} undeclared stores denied")


def _probe_2(h: EnvHandle):
    """Ask the package manager about the app's own package."""
    try:
        h.call(ApiCall("get_package_info", package=h.own_package))
    except PackageNotFoundError:
        return _detected(f"{h.own_package} reported as not installed")
    return _clean("own package info returned")


def _probe_3(h: EnvHandle):
    """Check undeclared dangerous permissions and try the guarded actions."""
    unchecked = sorted(DANGEROUS_PERMISSIONS - h.declared.permissions)
    if not unchecked:
        return _clean("every dangerous permission is declared; nothing to check")
    granted = [
        p for p in unchecked
        if h.call(ApiCall("check_permission", permission=p)) == "granted"
    ]
    confirmed = []
    stores_by_guard = {guard: store for store, guard in STORE_GUARDS.items()}
    for p in granted:
        store = stores_by_guard.get(p)
        if store is None:
            continue
        try:
            h.call(ApiCall("access_resource", store=store))
            confirmed.append(store)
        except PermissionDeniedError:
            pass
    if granted:
        short = [p.rsplit(".", 1)[-1] for p in granted]
        return _detected(
            f"undeclared dangerous permissions granted: {', '.join(short)}"
            + (f"; actions confirmed on: {', '.join(confirmed)}" if confirmed else "")
        )
    return _clean(f"all {len(unchecked)} undeclared dangerous permissions denied")


def _probe_4(h: EnvHandle):
    """Look for the app's own package in the installed-packages list."""
    installed = h.call(ApiCall("get_installed_packages"))
    if h.own_package in installed:
        return _clean("own package present in the installed list")
    return _detected(
        f"own package absent from installed list ({len(installed)} packages)"
    )


def _probe_5(h: EnvHandle):
    """Scan recent and running tasks for components the app never declared."""
    own_names = {name for _, name in extract_components(h.declared)}
    tasks = list(h.call(ApiCall("get_recent_tasks")))
    tasks += list(h.call(ApiCall("get_running_tasks")))
    foreign = sorted({name for _, name in tasks if name not in own_names})
    if foreign:
        return _detected(f"foreign task components visible: {', '.join(foreign)}")
    return _clean(f"{len(tasks)} task entries, all own components")


def _probe_6(h: EnvHandle):
    """Look for foreign entries in the running-services list."""
    own = {s.name for s in h.declared.services}
    services = h.call(ApiCall("get_running_services"))
    foreign = sorted(set(services) - own)
    if foreign:
        return _detected(f"foreign services visible: {', '.join(foreign)}")
    return _inconclusive(
        "running-services list is restricted to the caller in every "
        "environment; this check cannot discriminate"
    )


def _probe_7(h: EnvHandle):
    """Compare same-UID process names against the app's expected name."""
    processes = h.call(ApiCall("get_running_app_processes"))
    alien = sorted({p["name"] for p in processes if p["name"] != h.own_package})
    if alien:
        return _detected(f"same-uid processes with foreign names: {', '.join(alien)}")
    return _clean(f"{len(processes)} same-uid process(es), all named {h.own_package}")


def _parse_ps_lines(output: str) -> list[tuple[int, int, str]]:
    rows = []
    for line in output.splitlines():
        parts = line.split()
        if len(parts) != 3:
            continue
        try:
            rows.append((int(parts[0]), int(parts[1]), parts[2]))
        except ValueError:
            continue
    return rows


def _probe_8(h: EnvHandle):
    """Run the process-list shell command and count distinct same-uid names."""
    output = h.call(ApiCall("exec_shell", cmd="ps"))
    rows = _parse_ps_lines(output)
    names = {name for _, _, name in rows}
    if len(rows) > 1 and len(names) > 1:
        return _detected(
            f"{len(rows)} processes under own uid with names: {', '.join(sorted(names))}"
        )
    return _clean(f"shell output parsed as {len(rows)} process line(s)")


def _probe_9(h: EnvHandle):
    """Check the private directory against the native pattern."""
    info = h.call(ApiCall("get_application_info", package=h.own_package))
    expected = f"/data/data/{h.own_package}"
    if info["data_dir"] != expected:
        return _detected(f"private directory is {info['data_dir']}")
    return _clean(f"private directory follows the native pattern {expected}")


def _probe_10(h: EnvHandle):
    """Check the reported code source against the native install path."""
    info = h.call(ApiCall("get_application_info", package=h.own_package))
    expected = f"/data/app/{h.own_package}/base.apk"
    if info["source_dir"] != expected:
        return _detected(f"code source is {info['source_dir']}")
    return _clean(f"code source is the native {expected}")


def _probe_11(h: EnvHandle):
    """Search the process memory map for a foreign APK path."""
    try:
        maps = h.call(ApiCall("read_proc_maps"))
    except AccessDeniedError:
        return _clean("process map read denied; no foreign apk path found")
    own_apk = f"/data/app/{h.own_package}/base.apk"
    foreign = [p for p in maps if p.endswith(".apk") and p != own_apk]
    if foreign:
        return _detected(f"foreign apk mapped: {foreign[0]}")
    return _clean(f"{len(maps)} mapped paths, own apk only")


def _probe_12(h: EnvHandle):
    """Search the process memory map for code loaded outside the native app dir."""
    try:
        maps = h.call(ApiCall("read_proc_maps"))
    except AccessDeniedError:
        return _clean("process map read denied; no suspicious library path found")
    prefix = f"/data/app/{h.own_package}/"
    suspicious = [p for p in maps if not p.startswith(prefix)]
    if suspicious:
        return _detected(f"code loaded from outside {prefix}: {suspicious[0]}")
    return _clean(f"all {len(maps)} mapped paths under {prefix}")


def _probe_13(h: EnvHandle):
    """Launch several declared services; a placeholder-starved host errors out."""
    to_launch = [s.name for s in h.declared.services][:3]
    if not to_launch:
        return _inconclusive("no declared services to launch")
    for i, name in enumerate(to_launch):
        try:
            h.call(ApiCall("start_service", name=name))
        except ApiError as exc:
            return _detected(
                f"service launch {i + 1} of {len(to_launch)} failed: {exc}"
            )
    return _clean(f"all {len(to_launch)} services launched")


def _probe_14(h: EnvHandle):
    """Compare the package manager's component list against the declared one."""
    try:
        info = h.call(ApiCall("get_package_info", package=h.own_package))
    except PackageNotFoundError:
        return _detected("own component list unavailable: package not installed")
    declared = sorted((k, n) for k, n in extract_components(h.declared))
    reported = sorted((k, n) for k, n in info["components"])
    if declared != reported:
        return _detected(
            f"component list mismatch: declared {len(declared)}, "
            f"reported {len(reported)}"
        )
    return _clean(f"all {len(declared)} components reported as declared")


def _probe_15(h: EnvHandle):
    """Unregister every manifest receiver, then test whether broadcasts still land."""
    receivers = h.declared.receivers
    if not receivers:
        return _clean("no receivers declared; nothing to unregister")
    for receiver in receivers:
        try:
            h.call(ApiCall("unregister_receiver", name=receiver.name))
        except StaticReceiverError:
            return _clean(
                f"{receiver.name} is statically registered and refused unregistration"
            )
    own_names = {r.name for r in receivers}
    actions = sorted({a for r in receivers for a in r.intents})
    delivered = []
    for action in actions:
        for owner, name in h.call(ApiCall("send_broadcast", action=action)):
            if name in own_names:
                delivered.append(name)
    if delivered:
        return _clean(f"broadcast still delivered to: {', '.join(sorted(set(delivered)))}")
    return _detected(
        f"all {len(receivers)} manifest receivers unregistered dynamically; "
        "broadcasts no longer delivered"
    )


def _probe_16(h: EnvHandle):
    """Toggle one of the app's own components at runtime."""
    components = extract_components(h.declared)
    if not components:
        return _inconclusive("no components declared")
    kind, name = components[0]
    try:
        h.call(ApiCall("set_component_enabled", component_kind=kind, name=name))
    except ComponentNotRegisteredError:
        return _detected(f"own component {name} is not registered with the system")
    return _clean(f"own component {name} toggled successfully")


def _probe_17(h: EnvHandle):
    """Write to the shared native-component blob and look for foreign writers."""
    native = sorted(h.declared.native_components)
    if not native:
        return _clean("no native components declared; nothing is shared")
    component = native[0]
    token = f"probe-token:{h.own_package}"
    h.call(ApiCall("native_blob_write", name=component, token=token))
    entries = h.call(ApiCall("native_blob_read", name=component))
    own_writer = next(writer for writer, t in reversed(entries) if t == token)
    foreign = sorted({writer for writer, _ in entries if writer != own_writer})
    if foreign:
        return _detected(
            f"{component} blob carries entries from foreign writers: {', '.join(foreign)}"
        )
    return _clean(f"{component} blob written by this process only")


def _probe_18(h: EnvHandle):
    """Lifecycle stack-trace analysis; modeled as non-discriminative."""
    return _inconclusive(
        "lifecycle stack-trace analysis does not discriminate in this model"
    )


PROBE_FUNCS = {
    "1": _probe_1,
    "2": _probe_2,
    "3": _probe_3,
    "4": _probe_4,
    "5": _probe_5,
    "6": _probe_6,
    "7": _probe_7,
    "8": _probe_8,
    "9": _probe_9,
    "10": _probe_10,
    "11": _probe_11,
    "12": _probe_12,
    "13": _probe_13,
    "14": _probe_14,
    "15": _probe_15,
    "16": _probe_16,
    "17": _probe_17,
    "18": _probe_18,
}


def run_probe(handle: EnvHandle, probe_id: str) -> ProbeOutcome:
    """Run one mechanism; unexpected failures surface as an error verdict."""
    if probe_id == artmodel.HOTNESS_PROBE_ID:
        try:
            return artmodel.hotness_check(handle.runtime)
        except artmodel.InsufficientWarmupError as exc:
            return ProbeOutcome(probe_id, Verdict.ERROR, f"warmup guard: {exc}")
    fn = PROBE_FUNCS.get(probe_id)
    if fn is None:
        raise ValueError(f"unknown probe id: {probe_id!r}")
    try:
        verdict, evidence = fn(handle)
    except Exception as exc:  # a legal environment never gets here
        return ProbeOutcome(probe_id, Verdict.ERROR,
                            f"{type(exc).__name__}: {exc}")
    return ProbeOutcome(probe_id, verdict, evidence)


def run_probes_on_world(world: World, probe_ids=PROBE_IDS) -> DetectionReport:
    """Run probes against fresh clones of one world, one clone per probe."""
    report = DetectionReport(environment=world.environment)
    for probe_id in probe_ids:
        clone = copy.deepcopy(world)
        report.outcomes.append(run_probe(EnvHandle(clone), probe_id))
    return report


def run_matrix(scenario: MatrixScenario,
               environments=ENVIRONMENTS) -> list[DetectionReport]:
    """Build each environment from scratch and run all probes in it."""
    reports = []
    for environment in environments:
        world = WORLD_BUILDERS[environment](scenario)
        reports.append(run_probes_on_world(world))
    return reports

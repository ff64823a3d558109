"""The virtualization engine hosted inside an installed add-on.

A container loads plugin apps that are not (necessarily) installed, forks
each into its own process under the add-on's UID, and routes every plugin
system call through a dispatch pipeline:

    lowlevel before/replace hooks -> proxy before/replace hooks
      -> baseline component-name rewriting -> os.syscall (container identity)
      -> baseline reply rewriting -> after hooks in reverse order

Baseline rewriting is the virtualization mechanic itself: component launch
requests carry a pre-declared stub name on the wire (or the component's own
name when the add-on manifest declares it verbatim), replies are rewritten
back, and application-info queries for a loaded plugin report the plugin's
private directory under the add-on. Hooks layer attack/bypass behavior on
top of that baseline.

All mutation happens through the owning scenario thread; simulated
background services advance only when tick_services is called.
"""

from __future__ import annotations

import os as _os
from dataclasses import dataclass, field
from typing import Callable

from .manifest import (
    ACTIVITY,
    PROVIDER,
    SERVICE,
    AppManifest,
    Component,
    ManifestError,
    launcher_activity,
    load_manifest_file,
)
from .permissions import PAYLOAD_STORES
from .simos import (
    AccessDeniedError,
    ApiCall,
    ApiError,
    SimOs,
    SimOsError,
    UnknownPackageError,
    replace_call,
)

PROXY = "proxy"
LOWLEVEL = "lowlevel"
LAYERS = (PROXY, LOWLEVEL)

BEFORE = "before"
AFTER = "after"
REPLACE = "replace"
MODES = (BEFORE, AFTER, REPLACE)

# Labels of the four bypass hooks, in installation order.
HOOK_PROCESS_NAMES = "rewrite-process-names"
HOOK_EXEC_PS = "exec-ps-to-ls"
HOOK_DATA_DIR = "native-data-dir"
HOOK_PROC_MAPS = "deny-proc-maps"
CLOAK_HOOK_LABELS = (HOOK_PROCESS_NAMES, HOOK_EXEC_PS, HOOK_DATA_DIR, HOOK_PROC_MAPS)


class ContainerError(SimOsError):
    pass


class AlreadyLoadedError(ContainerError):
    pass


class NotAPluginError(ContainerError):
    pass


class CatalogFetchError(ContainerError):
    pass


class NoFreeStubError(ApiError):
    reason = "no_free_stub"


@dataclass(frozen=True)
class HookSpec:
    """One interception rule.

    ``transform`` maps (call, reply) to (call', reply') and may raise an
    ApiError to synthesize a failure. Replace-mode hooks produce the reply
    themselves; the underlying call is never made. Hooks on one target
    compose in installation order (after-phase runs in reverse).
    """

    layer: str
    target: str
    mode: str
    transform: Callable[[ApiCall, object], tuple[ApiCall, object]]
    label: str = ""

    def __post_init__(self) -> None:
        if self.layer not in LAYERS:
            raise ValueError(f"unknown hook layer: {self.layer!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown hook mode: {self.mode!r}")


def before_hook(layer: str, target: str, fn: Callable[[ApiCall], ApiCall],
                label: str = "") -> HookSpec:
    return HookSpec(layer, target, BEFORE, lambda call, reply: (fn(call), reply), label)


def after_hook(layer: str, target: str, fn: Callable[[ApiCall, object], object],
               label: str = "") -> HookSpec:
    return HookSpec(layer, target, AFTER, lambda call, reply: (call, fn(call, reply)), label)


def replace_hook(layer: str, target: str, fn: Callable[[ApiCall], object],
                 label: str = "") -> HookSpec:
    return HookSpec(layer, target, REPLACE, lambda call, reply: (call, fn(call)), label)


@dataclass
class ContainerState:
    addon_package: str
    addon_manifest: AppManifest
    container_pid: int
    plugin_data_root: str
    stub_components: list[Component] = field(default_factory=list)
    plugin_manifests: dict[str, AppManifest] = field(default_factory=dict)
    plugin_processes: dict[str, int] = field(default_factory=dict)
    plugin_apk_paths: dict[str, str] = field(default_factory=dict)
    plugin_data_dirs: dict[str, str] = field(default_factory=dict)
    # stub name -> (plugin package, kind, real name), and the inverse
    stub_assignments: dict[str, tuple[str, str, str]] = field(default_factory=dict)
    component_stub_map: dict[tuple[str, str, str], str] = field(default_factory=dict)
    foreground_plugin: str | None = None
    proxy_hooks: list[HookSpec] = field(default_factory=list)
    lowlevel_hooks: list[HookSpec] = field(default_factory=list)
    run_log: list[dict] = field(default_factory=list)

    def pid_to_plugin(self, pid: int) -> str | None:
        for package, plugin_pid in self.plugin_processes.items():
            if plugin_pid == pid:
                return package
        return None


def create_container(os: SimOs, addon: AppManifest) -> ContainerState:
    """Open an empty virtual environment inside an installed add-on."""
    record = os.registry.get(addon.package)
    if record is None:
        raise UnknownPackageError(f"{addon.package} is not installed")
    pid = os.spawn_process(
        addon.package,
        name=addon.package,
        maps=[record.apk_path, f"/data/app/{addon.package}/lib/libhost.so"],
    )
    plugin_root = f"{record.data_dir}/Plugin"
    os.mkdir(plugin_root)
    return ContainerState(
        addon_package=addon.package,
        addon_manifest=record.manifest,
        container_pid=pid,
        plugin_data_root=plugin_root,
        stub_components=[c for c in record.manifest.components() if c.stub],
    )


def load_plugin(os: SimOs, c: ContainerState, plugin: AppManifest,
                plugin_apk_path: str) -> int:
    """Fork a shared-UID process for a plugin and wire it into the environment.

    The plugin is not installed: its receivers are registered dynamically,
    its private directory lives under the add-on, and its launcher activity
    (when present) is opened through the dispatch pipeline, taking
    foreground from any previously loaded plugin.
    """
    if plugin.package in c.plugin_manifests:
        raise AlreadyLoadedError(f"{plugin.package} is already loaded")
    addon_record = os.registry[c.addon_package]
    pid = os.spawn_process(
        c.addon_package,
        name=f"{c.addon_package}:p{len(c.plugin_manifests) + 1}",
        maps=[addon_record.apk_path, plugin_apk_path],
    )
    data_dir = f"{c.plugin_data_root}/{plugin.package}"
    os.mkdir(data_dir)
    c.plugin_manifests[plugin.package] = plugin
    c.plugin_processes[plugin.package] = pid
    c.plugin_apk_paths[plugin.package] = plugin_apk_path
    c.plugin_data_dirs[plugin.package] = data_dir
    for receiver in plugin.receivers:
        os.syscall(pid, ApiCall("register_receiver", name=receiver.name,
                                actions=receiver.intents))
    for native in sorted(plugin.native_components):
        os.syscall(pid, ApiCall("native_blob_write", name=native,
                                token=f"init:{plugin.package}"))
    launcher = launcher_activity(plugin)
    if launcher is not None:
        plugin_syscall(os, c, pid, ApiCall("start_activity", name=launcher.name))
        c.foreground_plugin = plugin.package
    return pid


def install_hook(c: ContainerState, h: HookSpec) -> None:
    """Append to the layer's list; duplicates compose, nothing deduplicates."""
    if h.layer == PROXY:
        c.proxy_hooks.append(h)
    else:
        c.lowlevel_hooks.append(h)


def uninstall_hooks(c: ContainerState, labels) -> int:
    """Drop every installed hook whose label is in ``labels``; returns count removed."""
    wanted = set(labels)
    removed = 0
    for attr in ("proxy_hooks", "lowlevel_hooks"):
        kept = [h for h in getattr(c, attr) if h.label not in wanted]
        removed += len(getattr(c, attr)) - len(kept)
        setattr(c, attr, kept)
    return removed


# ---------------------------------------------------------------------------
# Dispatch


def _map_component_out(c: ContainerState, plugin_package: str, kind: str,
                       name: str) -> str:
    """Outgoing name for a plugin component: verbatim, assigned stub, or a fresh stub."""
    declared = c.addon_manifest.component(kind, name)
    if declared is not None and not declared.stub:
        return name
    key = (plugin_package, kind, name)
    assigned = c.component_stub_map.get(key)
    if assigned is not None:
        return assigned
    taken = set(c.stub_assignments)
    for stub in c.stub_components:
        if stub.kind == kind and stub.name not in taken:
            c.stub_assignments[stub.name] = key
            c.component_stub_map[key] = stub.name
            return stub.name
    raise NoFreeStubError(
        f"no free {kind} stub left for {plugin_package}/{name}"
    )


def _map_name_back(c: ContainerState, name: str) -> str:
    assigned = c.stub_assignments.get(name)
    return assigned[2] if assigned is not None else name


# Lifecycle calls whose component names travel under stub names.
_REWRITTEN_KINDS = {
    "start_activity": ACTIVITY,
    "start_service": SERVICE,
    "acquire_provider": PROVIDER,
}


def _rewrite_request(c: ContainerState, plugin_package: str, call: ApiCall) -> ApiCall:
    component_kind = _REWRITTEN_KINDS.get(call.kind)
    if component_kind is None:
        return call
    return replace_call(
        call, name=_map_component_out(c, plugin_package, component_kind, call.name or "")
    )


def _rewrite_reply(c: ContainerState, call: ApiCall, reply):
    if call.kind in _REWRITTEN_KINDS:
        return _map_name_back(c, reply)
    if call.kind in ("get_running_tasks", "get_recent_tasks"):
        return [[kind, _map_name_back(c, name)] for kind, name in reply]
    return reply


def _synthesize_application_info(os: SimOs, c: ContainerState, package: str) -> dict:
    # The view the environment gives a loaded plugin: its files really live
    # under the add-on, while the code source stays the native APK when the
    # package happens to be installed on the device.
    record = os.registry.get(package)
    source_dir = record.apk_path if record is not None else c.plugin_apk_paths[package]
    return {
        "package": package,
        "source_dir": source_dir,
        "data_dir": c.plugin_data_dirs[package],
    }


def plugin_syscall(os: SimOs, c: ContainerState, caller: int, call: ApiCall):
    """Run one plugin call through hooks, baseline rewriting, and the OS."""
    plugin_package = c.pid_to_plugin(caller)
    if plugin_package is None:
        raise NotAPluginError(f"pid {caller} is not a plugin process of {c.addon_package}")

    on_target = [
        h for h in c.lowlevel_hooks + c.proxy_hooks if h.target == call.kind
    ]
    replacement = next((h for h in on_target if h.mode == REPLACE), None)
    for hook in on_target:
        if hook.mode == BEFORE:
            call, _ = hook.transform(call, None)

    if replacement is not None:
        _, reply = replacement.transform(call, None)
    elif call.kind == "get_application_info" and call.package in c.plugin_manifests:
        reply = _synthesize_application_info(os, c, call.package)
    else:
        wire_call = _rewrite_request(c, plugin_package, call)
        reply = os.syscall(caller, wire_call)
        reply = _rewrite_reply(c, wire_call, reply)

    for hook in reversed(on_target):
        if hook.mode == AFTER:
            _, reply = hook.transform(call, reply)
    return reply


# ---------------------------------------------------------------------------
# Bypass hookset


def install_cloaking_hookset(c: ContainerState, victim_package: str) -> None:
    """Install the four bypass hooks a disguised add-on ships.

    (a) every reported process name becomes the victim's process name;
    (b) shell "ps" is executed as "ls"; (c) application info reports the
    native private-directory pattern; (d) process-map reads are denied
    outright (covers both the foreign-APK and foreign-library checks).
    """

    def rename_processes(call: ApiCall, reply):
        return [dict(entry, name=victim_package) for entry in reply]

    def ps_to_ls(call: ApiCall) -> ApiCall:
        return replace_call(call, cmd="ls") if call.cmd == "ps" else call

    def native_data_dir(call: ApiCall, reply):
        return dict(reply, data_dir=f"/data/data/{reply['package']}")

    def deny_maps(call: ApiCall):
        raise AccessDeniedError("access to /proc/self/maps is disabled")

    install_hook(c, after_hook(PROXY, "get_running_app_processes",
                               rename_processes, HOOK_PROCESS_NAMES))
    install_hook(c, before_hook(LOWLEVEL, "exec_shell", ps_to_ls, HOOK_EXEC_PS))
    install_hook(c, after_hook(PROXY, "get_application_info",
                               native_data_dir, HOOK_DATA_DIR))
    install_hook(c, replace_hook(LOWLEVEL, "read_proc_maps", deny_maps, HOOK_PROC_MAPS))


# ---------------------------------------------------------------------------
# First run and background services


def _fetch_catalog_manifest(catalog_source: str) -> AppManifest:
    if not _os.path.isdir(catalog_source):
        raise CatalogFetchError(f"catalog source missing: {catalog_source}")
    documents = sorted(
        f for f in _os.listdir(catalog_source) if f.endswith(".json")
    )
    if not documents:
        raise CatalogFetchError(f"no manifest documents in {catalog_source}")
    path = _os.path.join(catalog_source, documents[0])
    try:
        return load_manifest_file(path)
    except (OSError, ManifestError) as exc:
        raise CatalogFetchError(f"cannot fetch {path}: {exc}") from exc


def first_run(os: SimOs, c: ContainerState, victim_package: str,
              catalog_source: str) -> list[dict]:
    """The add-on's first execution, in order.

    Stops the victim's native process, plants a shortcut that looks like the
    victim but targets the add-on, fetches the payload manifest from a local
    catalog directory, loads it as a background plugin with every service
    started, then loads the victim as the foreground plugin. The fetch
    completes before any plugin load, so a fetch failure never leaves a
    half-populated environment.
    """
    victim_record = os.registry.get(victim_package)
    if victim_record is None:
        raise UnknownPackageError(f"victim {victim_package} is not installed")
    log = c.run_log

    killed = os.syscall(
        c.container_pid, ApiCall("kill_background_processes", package=victim_package)
    )
    log.append({"step": "kill_victim", "package": victim_package, "killed": killed})

    addon = c.addon_manifest
    label = addon.shortcut_label or victim_record.manifest.label
    icon = addon.shortcut_icon or victim_record.manifest.launcher_icon
    if (label, icon, c.addon_package) in os.shortcuts:
        log.append({
            "step": "warning",
            "detail": f"shortcut ({label}, {icon}) already exists; creating another",
        })
    os.syscall(c.container_pid, ApiCall(
        "create_shortcut", label=label, icon=icon, target_package=c.addon_package
    ))
    log.append({"step": "create_shortcut", "label": label, "icon": icon,
                "target": c.addon_package})

    malicious = _fetch_catalog_manifest(catalog_source)
    log.append({"step": "fetch_payload", "document": f"{malicious.package}.json",
                "package": malicious.package})

    payload_apk = f"{c.plugin_data_root}/{malicious.package}/base.apk"
    payload_pid = load_plugin(os, c, malicious, payload_apk)
    started = []
    for service in malicious.services:
        try:
            plugin_syscall(os, c, payload_pid, ApiCall("start_service", name=service.name))
            started.append(service.name)
        except ApiError as exc:
            log.append({"step": "warning",
                        "detail": f"service {service.name} failed to start: {exc}"})
    log.append({"step": "start_payload_services", "package": malicious.package,
                "pid": payload_pid, "services": started})

    victim_pid = load_plugin(os, c, victim_record.manifest, victim_record.apk_path)
    log.append({"step": "load_victim", "package": victim_package, "pid": victim_pid,
                "foreground": c.foreground_plugin == victim_package})
    return log


def tick_services(os: SimOs, c: ContainerState) -> None:
    """One synchronous sweep of every running payload service.

    Each service reads its payload store under the shared UID and appends
    (payload tag, record) pairs to the exfiltration sink. A denied read is
    logged, never raised: the corresponding permission simply is not there.
    """
    for package, pid in c.plugin_processes.items():
        manifest = c.plugin_manifests[package]
        proc = os.process(pid)
        for service_name in list(proc.running_services):
            service = manifest.component(SERVICE, service_name)
            if service is None or service.payload is None:
                continue
            store = PAYLOAD_STORES[service.payload]
            try:
                records = plugin_syscall(os, c, pid, ApiCall("access_resource", store=store))
            except ApiError as exc:
                c.run_log.append({
                    "step": "warning",
                    "detail": f"{service_name}: {store} read denied ({exc})",
                })
                continue
            for record in records:
                os.exfil_sink.append((service.payload, record))

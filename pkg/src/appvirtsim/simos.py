"""The miniature operating-system surface.

One SimOs instance is one device: a package registry with per-package UIDs,
a process table, simulated filesystem paths, broadcast registrations,
permission-guarded data stores, and the system-call surface that container
proxies wrap and detection probes call.

A SimOs is a single mutable world driven sequentially by one owner; distinct
instances are independent (deepcopy a world to branch it).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .manifest import ACTIVITY, PROVIDER, SERVICE, AppManifest
from .permissions import (
    INSTALL_SHORTCUT,
    KILL_BACKGROUND_PROCESSES,
    STORE_GUARDS,
    STORE_NAMES,
)

UID_BASE = 10001
FIRST_PID = 1

DATA_DIR_CHILDREN = ("cache", "files", "shared_prefs")

# The system-call surface. Lifecycle starts and the shared native-component
# blob are part of it: component launches are what the container's dispatch
# layer rewrites, and the blob is how same-UID apps end up sharing state.
API_KINDS = frozenset({
    "get_installed_packages",
    "get_package_info",
    "check_permission",
    "get_recent_tasks",
    "get_running_tasks",
    "get_running_services",
    "get_running_app_processes",
    "get_application_info",
    "set_component_enabled",
    "exec_shell",
    "read_proc_maps",
    "register_receiver",
    "unregister_receiver",
    "send_broadcast",
    "access_resource",
    "create_shortcut",
    "kill_background_processes",
    "start_activity",
    "start_service",
    "acquire_provider",
    "native_blob_write",
    "native_blob_read",
})


class SimOsError(Exception):
    """Base class for OS-level failures."""


class AlreadyInstalledError(SimOsError):
    pass


class UnknownPackageError(SimOsError):
    pass


class UnknownProcessError(SimOsError):
    pass


class ApiError(SimOsError):
    """A system call failed; ``reason`` is a stable machine-readable code."""

    reason = "api_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.reason)


class PackageNotFoundError(ApiError):
    reason = "package_not_found"


class ComponentNotRegisteredError(ApiError):
    reason = "component_not_registered"


class PermissionDeniedError(ApiError):
    reason = "permission_denied"


class AccessDeniedError(ApiError):
    reason = "access_denied"


class UnknownCommandError(ApiError):
    reason = "unknown_command"


class StaticReceiverError(ApiError):
    reason = "static_receiver"


class UnknownReceiverError(ApiError):
    reason = "unknown_receiver"


class UnknownStoreError(ApiError):
    reason = "unknown_store"


@dataclass(frozen=True)
class ApiCall:
    """One request to the OS. Unused argument fields stay None.

    Frozen so hook transforms rewrite copies (dataclasses.replace) instead
    of mutating a call another hook already saw.
    """

    kind: str
    package: str | None = None
    permission: str | None = None
    store: str | None = None
    cmd: str | None = None
    name: str | None = None
    component_kind: str | None = None
    action: str | None = None
    actions: tuple[str, ...] = ()
    label: str | None = None
    icon: str | None = None
    target_package: str | None = None
    token: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.kind not in API_KINDS:
            raise ValueError(f"unknown api call kind: {self.kind!r}")


replace_call = replace


@dataclass
class PackageRecord:
    """Installed-package metadata and its private-directory path."""

    manifest: AppManifest
    uid: int
    apk_path: str
    data_dir: str
    granted_permissions: set[str]
    static_receivers: set[str]


@dataclass
class SimProcess:
    """One process-table row."""

    pid: int
    uid: int
    name: str
    owner_package: str
    memory_maps: list[str] = field(default_factory=list)
    running_task_components: list[tuple[str, str]] = field(default_factory=list)
    running_services: list[str] = field(default_factory=list)


class SimOs:
    def __init__(self) -> None:
        self.registry: dict[str, PackageRecord] = {}
        self.processes: dict[int, SimProcess] = {}
        self.next_pid = FIRST_PID
        self.next_uid = UID_BASE
        self.shortcuts: list[tuple[str, str, str]] = []
        # (uid, receiver name) -> actions it listens for
        self.dynamic_receivers: dict[tuple[int, str], tuple[str, ...]] = {}
        self.data_stores: dict[str, list[str]] = {s: [] for s in STORE_NAMES}
        # Append-only: (payload tag, record)
        self.exfil_sink: list[tuple[str, str]] = []
        # (uid, native component name) -> [(writer process name, token)]
        self.native_blobs: dict[tuple[int, str], list[tuple[str, str]]] = {}
        self.fs_dirs: set[str] = set()

    # -- filesystem bookkeeping -------------------------------------------

    def mkdir(self, path: str) -> None:
        self.fs_dirs.add(path.rstrip("/"))

    def list_dir(self, path: str) -> list[str]:
        prefix = path.rstrip("/") + "/"
        children = {
            d[len(prefix):].split("/", 1)[0]
            for d in self.fs_dirs
            if d.startswith(prefix)
        }
        return sorted(children)

    # -- installation and processes ---------------------------------------

    def install(self, m: AppManifest) -> PackageRecord:
        """Register a package: fresh UID, native paths, all declared permissions granted."""
        if m.package in self.registry:
            raise AlreadyInstalledError(f"{m.package} is already installed")
        uid = self.next_uid
        self.next_uid += 1
        data_dir = f"/data/data/{m.package}"
        record = PackageRecord(
            manifest=m,
            uid=uid,
            apk_path=f"/data/app/{m.package}/base.apk",
            data_dir=data_dir,
            granted_permissions=set(m.permissions),
            static_receivers={r.name for r in m.receivers},
        )
        self.registry[m.package] = record
        self.mkdir(data_dir)
        for child in DATA_DIR_CHILDREN:
            self.mkdir(f"{data_dir}/{child}")
        return record

    def spawn_process(self, package: str, name: str, maps: list[str]) -> int:
        """Create a process owned by an installed package; returns its pid."""
        record = self.registry.get(package)
        if record is None:
            raise UnknownPackageError(f"{package} is not installed")
        pid = self.next_pid
        self.next_pid += 1
        self.processes[pid] = SimProcess(
            pid=pid,
            uid=record.uid,
            name=name,
            owner_package=package,
            memory_maps=list(maps),
        )
        return pid

    def process(self, pid: int) -> SimProcess:
        proc = self.processes.get(pid)
        if proc is None:
            raise UnknownProcessError(f"no such pid: {pid}")
        return proc

    def seed_store(self, store: str, records: list[str]) -> None:
        if store not in self.data_stores:
            raise UnknownStoreError(f"no such store: {store}")
        self.data_stores[store] = list(records)

    def _identity(self, proc: SimProcess) -> PackageRecord:
        record = self.registry.get(proc.owner_package)
        if record is None:
            raise UnknownPackageError(
                f"process {proc.pid} owned by uninstalled package {proc.owner_package}"
            )
        return record

    # -- the system-call surface ------------------------------------------

    def syscall(self, caller: int, call: ApiCall):
        """Native-faithful reply for one call; the single entry point proxies wrap."""
        proc = self.process(caller)
        handler = getattr(self, f"_op_{call.kind}")
        return handler(proc, call)

    def _op_get_installed_packages(self, proc, call):
        return sorted(self.registry)

    def _op_get_package_info(self, proc, call):
        record = self.registry.get(call.package or "")
        if record is None:
            raise PackageNotFoundError(f"{call.package} is not installed")
        m = record.manifest
        return {
            "package": m.package,
            "version": m.version,
            "permissions": sorted(m.permissions),
            "components": [[c.kind, c.name] for c in m.components()],
        }

    def _op_check_permission(self, proc, call):
        record = self._identity(proc)
        granted = call.permission in record.granted_permissions
        return "granted" if granted else "denied"

    def _tasks_for(self, proc) -> list[list[str]]:
        # Post-API-21 restriction: only tasks of the caller's own package.
        tasks = []
        for pid in sorted(self.processes):
            other = self.processes[pid]
            if other.owner_package == proc.owner_package:
                tasks.extend([kind, name] for kind, name in other.running_task_components)
        return tasks

    def _op_get_recent_tasks(self, proc, call):
        return self._tasks_for(proc)

    def _op_get_running_tasks(self, proc, call):
        return self._tasks_for(proc)

    def _op_get_running_services(self, proc, call):
        # Restricted to the calling process's own services in every
        # environment; detection built on this call cannot work.
        return list(proc.running_services)

    def _op_get_running_app_processes(self, proc, call):
        return [
            {"pid": p.pid, "uid": p.uid, "name": p.name}
            for p in sorted(self.processes.values(), key=lambda p: p.pid)
            if p.uid == proc.uid
        ]

    def _op_get_application_info(self, proc, call):
        record = self.registry.get(call.package or "")
        if record is None:
            raise PackageNotFoundError(f"{call.package} is not installed")
        return {
            "package": record.manifest.package,
            "source_dir": record.apk_path,
            "data_dir": record.data_dir,
        }

    def _op_set_component_enabled(self, proc, call):
        record = self._identity(proc)
        comp = record.manifest.component(call.component_kind or "", call.name or "")
        if comp is None:
            raise ComponentNotRegisteredError(
                f"{call.name} is not a registered {call.component_kind} "
                f"of {proc.owner_package}"
            )
        return {"component": comp.name, "enabled": True}

    def _op_exec_shell(self, proc, call):
        if call.cmd == "ps":
            lines = [
                f"{p.pid} {p.uid} {p.name}"
                for p in sorted(self.processes.values(), key=lambda p: p.pid)
                if p.uid == proc.uid
            ]
            return "\n".join(lines)
        if call.cmd == "ls":
            record = self._identity(proc)
            return "\n".join(self.list_dir(record.data_dir))
        raise UnknownCommandError(f"unknown command: {call.cmd!r}")

    def _op_read_proc_maps(self, proc, call):
        return list(proc.memory_maps)

    def _op_register_receiver(self, proc, call):
        self.dynamic_receivers[(proc.uid, call.name or "")] = tuple(call.actions)
        return {"receiver": call.name, "registered": True}

    def _op_unregister_receiver(self, proc, call):
        record = self._identity(proc)
        name = call.name or ""
        if name in record.static_receivers:
            raise StaticReceiverError(
                f"{name} is statically registered by {record.manifest.package}"
            )
        key = (proc.uid, name)
        if key not in self.dynamic_receivers:
            raise UnknownReceiverError(f"{name} is not registered for uid {proc.uid}")
        del self.dynamic_receivers[key]
        return {"receiver": name, "registered": False}

    def _op_send_broadcast(self, proc, call):
        delivered = []
        for package in sorted(self.registry):
            record = self.registry[package]
            for receiver in record.manifest.receivers:
                if call.action in receiver.intents:
                    delivered.append([package, receiver.name])
        for (uid, name) in sorted(self.dynamic_receivers):
            if call.action in self.dynamic_receivers[(uid, name)]:
                delivered.append([f"uid:{uid}", name])
        return delivered

    def _op_access_resource(self, proc, call):
        store = call.store or ""
        if store not in self.data_stores:
            raise UnknownStoreError(f"no such store: {store}")
        record = self._identity(proc)
        guard = STORE_GUARDS[store]
        if guard not in record.granted_permissions:
            raise PermissionDeniedError(f"{store} requires {guard}")
        return list(self.data_stores[store])

    def _op_create_shortcut(self, proc, call):
        record = self._identity(proc)
        if INSTALL_SHORTCUT not in record.granted_permissions:
            raise PermissionDeniedError("creating shortcuts requires INSTALL_SHORTCUT")
        self.shortcuts.append((call.label or "", call.icon or "", call.target_package or ""))
        return {"shortcuts": len(self.shortcuts)}

    def _op_kill_background_processes(self, proc, call):
        record = self._identity(proc)
        if KILL_BACKGROUND_PROCESSES not in record.granted_permissions:
            raise PermissionDeniedError(
                "killing processes requires KILL_BACKGROUND_PROCESSES"
            )
        doomed = [
            pid
            for pid, p in self.processes.items()
            if p.owner_package == call.package and pid != proc.pid
        ]
        for pid in doomed:
            del self.processes[pid]
        return len(doomed)

    def _op_start_activity(self, proc, call):
        record = self._identity(proc)
        comp = record.manifest.component(ACTIVITY, call.name or "")
        if comp is None:
            raise ComponentNotRegisteredError(
                f"{call.name} is not a registered activity of {proc.owner_package}"
            )
        proc.running_task_components.append((ACTIVITY, comp.name))
        return comp.name

    def _op_start_service(self, proc, call):
        record = self._identity(proc)
        comp = record.manifest.component(SERVICE, call.name or "")
        if comp is None:
            raise ComponentNotRegisteredError(
                f"{call.name} is not a registered service of {proc.owner_package}"
            )
        proc.running_services.append(comp.name)
        return comp.name

    def _op_acquire_provider(self, proc, call):
        record = self._identity(proc)
        comp = record.manifest.component(PROVIDER, call.name or "")
        if comp is None:
            raise ComponentNotRegisteredError(
                f"{call.name} is not a registered provider of {proc.owner_package}"
            )
        return comp.name

    def _op_native_blob_write(self, proc, call):
        key = (proc.uid, call.name or "")
        self.native_blobs.setdefault(key, []).append((proc.name, call.token or ""))
        return {"entries": len(self.native_blobs[key])}

    def _op_native_blob_read(self, proc, call):
        return [list(entry) for entry in self.native_blobs.get((proc.uid, call.name or ""), [])]

"""Declarative app manifests: data model, file format, extraction queries.

A manifest document is a strict JSON object describing a simulated app:

    {
      "package": "org.example.app",          # required, reverse-DNS
      "label": "Example",                    # display name
      "version": 3,                          # integer >= 0
      "permissions": ["android.permission.INTERNET", ...],
      "features": ["android.hardware.camera", ...],
      "components": {
        "activities": [{"name": ".Main", "launcher": true}],
        "services":   [{"name": ".Sync",
                        "requires_permissions": [...],   # catalog services
                        "payload": "contacts",           # catalog services
                        "stub": true}],                  # container stubs
        "receivers":  [{"name": ".Boot", "intents": ["BOOT"]}],
        "providers":  [{"name": ".Data"}]
      },
      "resources": {"launcher_icon": "ic_launcher.png",
                    "shortcut_icon": "...", "shortcut_label": "..."},
      "native_components": ["webview"]
    }

Parsing is strict: unknown keys anywhere in the document are rejected so
fixture typos fail loudly. Component names must be unique across all four
kinds and at most one activity may carry the launcher flag.

All types here are immutable; parsing and the extraction queries are pure
functions, safe to call from any thread.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

__all__ = [
    "ACTIVITY",
    "SERVICE",
    "RECEIVER",
    "PROVIDER",
    "COMPONENT_KINDS",
    "ManifestError",
    "SchemaError",
    "DuplicateComponentError",
    "MultipleLauncherError",
    "NoLauncherError",
    "Component",
    "AppManifest",
    "ServiceCatalog",
    "parse_manifest",
    "parse_manifest_dict",
    "serialize_manifest",
    "manifest_to_dict",
    "load_manifest_file",
    "write_manifest_file",
    "extract_permissions",
    "extract_components",
    "extract_launcher_resources",
    "launcher_activity",
]

ACTIVITY = "activity"
SERVICE = "service"
RECEIVER = "receiver"
PROVIDER = "provider"
COMPONENT_KINDS = (ACTIVITY, SERVICE, RECEIVER, PROVIDER)

_PACKAGE_RE = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z0-9_]+)+$")


class ManifestError(ValueError):
    """Base class for manifest construction and parsing failures."""


class SchemaError(ManifestError):
    """Document does not match the manifest schema."""


class DuplicateComponentError(ManifestError):
    """Two components share a name within one manifest."""


class MultipleLauncherError(ManifestError):
    """More than one activity carries the launcher flag."""


class NoLauncherError(ManifestError):
    """The manifest declares no launcher activity."""


@dataclass(frozen=True)
class Component:
    """One declared app component.

    Kind-specific fields must be absent for other kinds: ``launcher`` is
    activity-only, ``intents`` receiver-only, ``requires_permissions`` and
    ``payload`` service-only (used by payload catalogs), and ``stub`` marks
    the placeholder components a container pre-declares (never receivers).
    """

    name: str
    kind: str
    launcher: bool = False
    intents: tuple[str, ...] = ()
    requires_permissions: frozenset[str] = frozenset()
    payload: str | None = None
    stub: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "intents", tuple(self.intents))
        object.__setattr__(
            self, "requires_permissions", frozenset(self.requires_permissions)
        )
        if not self.name:
            raise SchemaError("component name must be non-empty")
        if self.kind not in COMPONENT_KINDS:
            raise SchemaError(f"unknown component kind: {self.kind!r}")
        if self.launcher and self.kind != ACTIVITY:
            raise SchemaError(f"{self.name}: launcher flag is activity-only")
        if self.intents and self.kind != RECEIVER:
            raise SchemaError(f"{self.name}: intents are receiver-only")
        if self.requires_permissions and self.kind != SERVICE:
            raise SchemaError(
                f"{self.name}: requires_permissions is service-only"
            )
        if self.payload is not None and self.kind != SERVICE:
            raise SchemaError(f"{self.name}: payload tag is service-only")
        if self.stub and self.kind == RECEIVER:
            raise SchemaError(f"{self.name}: receivers are never stubs")


@dataclass(frozen=True)
class AppManifest:
    """Validated, immutable description of a simulated app."""

    package: str
    label: str = ""
    version: int = 0
    permissions: frozenset[str] = frozenset()
    features: frozenset[str] = frozenset()
    activities: tuple[Component, ...] = ()
    services: tuple[Component, ...] = ()
    receivers: tuple[Component, ...] = ()
    providers: tuple[Component, ...] = ()
    launcher_icon: str = "ic_launcher.png"
    shortcut_icon: str | None = None
    shortcut_label: str | None = None
    native_components: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "permissions", frozenset(self.permissions))
        object.__setattr__(self, "features", frozenset(self.features))
        object.__setattr__(
            self, "native_components", frozenset(self.native_components)
        )
        for kind in ("activities", "services", "receivers", "providers"):
            object.__setattr__(self, kind, tuple(getattr(self, kind)))
        if not _PACKAGE_RE.match(self.package):
            raise SchemaError(
                f"package must be a reverse-DNS name, got {self.package!r}"
            )
        if not self.label:
            object.__setattr__(self, "label", self.package)
        if self.version < 0:
            raise SchemaError("version must be >= 0")
        for kind, comps in (
            (ACTIVITY, self.activities),
            (SERVICE, self.services),
            (RECEIVER, self.receivers),
            (PROVIDER, self.providers),
        ):
            for comp in comps:
                if comp.kind != kind:
                    raise SchemaError(
                        f"{comp.name}: declared under {kind} but has kind {comp.kind}"
                    )
        seen: set[str] = set()
        for comp in self.components():
            if comp.name in seen:
                raise DuplicateComponentError(
                    f"duplicate component name: {comp.name!r}"
                )
            seen.add(comp.name)
        launchers = [a for a in self.activities if a.launcher]
        if len(launchers) > 1:
            raise MultipleLauncherError(
                f"{self.package}: {len(launchers)} launcher activities declared"
            )

    def components(self) -> tuple[Component, ...]:
        """All components in canonical order: activities, services, receivers, providers."""
        return self.activities + self.services + self.receivers + self.providers

    def component(self, kind: str, name: str) -> Component | None:
        for comp in self.components():
            if comp.kind == kind and comp.name == name:
                return comp
        return None


@dataclass(frozen=True)
class ServiceCatalog:
    """A services-only payload catalog, validated from a manifest document.

    Every entry must be a service carrying a payload tag and requiring the
    INTERNET permission (the exfiltration channel) among its permissions.
    """

    package: str
    label: str
    version: int
    launcher_icon: str
    entries: tuple[Component, ...] = field(default=())

    @classmethod
    def from_manifest(cls, m: AppManifest) -> "ServiceCatalog":
        from . import permissions as perms

        if m.activities or m.receivers or m.providers:
            raise SchemaError(
                f"{m.package}: payload catalogs declare services only"
            )
        if not m.services:
            raise SchemaError(f"{m.package}: payload catalog has no services")
        for svc in m.services:
            if perms.INTERNET not in svc.requires_permissions:
                raise SchemaError(
                    f"{svc.name}: catalog services must require INTERNET"
                )
            if svc.payload is None:
                raise SchemaError(f"{svc.name}: catalog service lacks a payload tag")
            if svc.payload not in perms.PAYLOAD_STORES:
                raise SchemaError(f"{svc.name}: unknown payload tag {svc.payload!r}")
        return cls(
            package=m.package,
            label=m.label,
            version=m.version,
            launcher_icon=m.launcher_icon,
            entries=m.services,
        )


# ---------------------------------------------------------------------------
# Parsing


def _expect(doc: dict, context: str, allowed: set[str]) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaError(
            f"{context}: unknown key(s) {sorted(unknown)!r}"
        )


def _string(doc: dict, context: str, key: str, default=None, required=False):
    if key not in doc:
        if required:
            raise SchemaError(f"{context}: missing required field {key!r}")
        return default
    value = doc[key]
    if not isinstance(value, str):
        raise SchemaError(f"{context}.{key}: expected string, got {type(value).__name__}")
    return value


def _string_list(doc: dict, context: str, key: str) -> list[str]:
    value = doc.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{context}.{key}: expected list of strings")
    return value


def _parse_component(entry: object, kind: str, context: str) -> Component:
    if not isinstance(entry, dict):
        raise SchemaError(f"{context}: expected object, got {type(entry).__name__}")
    allowed = {"name", "stub"}
    if kind == ACTIVITY:
        allowed |= {"launcher"}
    elif kind == SERVICE:
        allowed |= {"requires_permissions", "payload"}
    elif kind == RECEIVER:
        allowed = {"name", "intents"}
    _expect(entry, context, allowed)
    name = _string(entry, context, "name", required=True)
    launcher = entry.get("launcher", False)
    stub = entry.get("stub", False)
    if not isinstance(launcher, bool) or not isinstance(stub, bool):
        raise SchemaError(f"{context}.{name}: launcher/stub must be booleans")
    payload = _string(entry, context, "payload")
    return Component(
        name=name,
        kind=kind,
        launcher=launcher,
        intents=tuple(_string_list(entry, context, "intents")),
        requires_permissions=frozenset(
            _string_list(entry, context, "requires_permissions")
        ),
        payload=payload,
        stub=stub,
    )


def parse_manifest_dict(doc: object) -> AppManifest:
    """Validate an already-decoded document into an AppManifest."""
    if not isinstance(doc, dict):
        raise SchemaError(f"manifest: expected object, got {type(doc).__name__}")
    _expect(
        doc,
        "manifest",
        {
            "package",
            "label",
            "version",
            "permissions",
            "features",
            "components",
            "resources",
            "native_components",
        },
    )
    package = _string(doc, "manifest", "package", required=True)
    version = doc.get("version", 0)
    if not isinstance(version, int) or isinstance(version, bool):
        raise SchemaError("manifest.version: expected integer")

    components = doc.get("components", {})
    if not isinstance(components, dict):
        raise SchemaError("manifest.components: expected object")
    _expect(components, "components", {"activities", "services", "receivers", "providers"})
    parsed: dict[str, list[Component]] = {}
    for key, kind in (
        ("activities", ACTIVITY),
        ("services", SERVICE),
        ("receivers", RECEIVER),
        ("providers", PROVIDER),
    ):
        entries = components.get(key, [])
        if not isinstance(entries, list):
            raise SchemaError(f"components.{key}: expected list")
        parsed[key] = [
            _parse_component(e, kind, f"components.{key}") for e in entries
        ]

    resources = doc.get("resources", {})
    if not isinstance(resources, dict):
        raise SchemaError("manifest.resources: expected object")
    _expect(resources, "resources", {"launcher_icon", "shortcut_icon", "shortcut_label"})

    return AppManifest(
        package=package,
        label=_string(doc, "manifest", "label", default=""),
        version=version,
        permissions=frozenset(_string_list(doc, "manifest", "permissions")),
        features=frozenset(_string_list(doc, "manifest", "features")),
        activities=tuple(parsed["activities"]),
        services=tuple(parsed["services"]),
        receivers=tuple(parsed["receivers"]),
        providers=tuple(parsed["providers"]),
        launcher_icon=_string(resources, "resources", "launcher_icon", default="ic_launcher.png"),
        shortcut_icon=_string(resources, "resources", "shortcut_icon"),
        shortcut_label=_string(resources, "resources", "shortcut_label"),
        native_components=frozenset(_string_list(doc, "manifest", "native_components")),
    )


def parse_manifest(text: str) -> AppManifest:
    """Parse a manifest document. Raises SchemaError on malformed input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest: not valid JSON ({exc})") from exc
    return parse_manifest_dict(doc)


def _component_to_dict(comp: Component) -> dict:
    entry: dict = {"name": comp.name}
    if comp.launcher:
        entry["launcher"] = True
    if comp.intents:
        entry["intents"] = list(comp.intents)
    if comp.requires_permissions:
        entry["requires_permissions"] = sorted(comp.requires_permissions)
    if comp.payload is not None:
        entry["payload"] = comp.payload
    if comp.stub:
        entry["stub"] = True
    return entry


def manifest_to_dict(m: AppManifest) -> dict:
    doc: dict = {
        "package": m.package,
        "label": m.label,
        "version": m.version,
        "permissions": sorted(m.permissions),
        "features": sorted(m.features),
        "components": {
            "activities": [_component_to_dict(c) for c in m.activities],
            "services": [_component_to_dict(c) for c in m.services],
            "receivers": [_component_to_dict(c) for c in m.receivers],
            "providers": [_component_to_dict(c) for c in m.providers],
        },
        "resources": {"launcher_icon": m.launcher_icon},
        "native_components": sorted(m.native_components),
    }
    if m.shortcut_icon is not None:
        doc["resources"]["shortcut_icon"] = m.shortcut_icon
    if m.shortcut_label is not None:
        doc["resources"]["shortcut_label"] = m.shortcut_label
    return doc


def serialize_manifest(m: AppManifest) -> str:
    """Canonical document text: fixed key order, sorted sets, trailing newline.

    parse_manifest(serialize_manifest(m)) == m for every valid manifest, and
    the output is byte-stable so generated corpora diff cleanly.
    """
    return json.dumps(manifest_to_dict(m), indent=2) + "\n"


def load_manifest_file(path) -> AppManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest(fh.read())


def write_manifest_file(path, m: AppManifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_manifest(m))


# ---------------------------------------------------------------------------
# Extraction queries


def extract_permissions(m: AppManifest) -> set[str]:
    """The declared permission set, as a fresh mutable copy."""
    return set(m.permissions)


def extract_components(m: AppManifest) -> list[tuple[str, str]]:
    """(kind, name) pairs: activities, services, receivers, providers, in declaration order."""
    return [(c.kind, c.name) for c in m.components()]


def launcher_activity(m: AppManifest) -> Component | None:
    for act in m.activities:
        if act.launcher:
            return act
    return None


def extract_launcher_resources(m: AppManifest) -> tuple[str, str]:
    """(launcher icon, display label). Raises NoLauncherError without a launcher."""
    if launcher_activity(m) is None:
        raise NoLauncherError(f"{m.package}: no launcher activity declared")
    return m.launcher_icon, m.label


# Re-exported for convenience when transforming manifests.
replace_manifest = replace

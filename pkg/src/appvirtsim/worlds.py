"""Scenario worlds: the three environments a probe app can run in.

A world bundles one SimOs, the container state when there is one, the probe
app's process and declared manifest, and that process's runtime model:

  * native: the probe app is installed and runs in its own process;
  * naive_container: an unmodified host template is installed; the probe
    app and a companion app run as uninstalled plugins, no bypass hooks;
  * cloaked_container: the add-on is customized for the probe app (playing
    the victim), the probe app is installed natively, the bypass hookset is
    live, and the first-run sequence has executed.

Worlds are deterministic for a given scenario and cheap to deepcopy, which
is how callers isolate probes from each other.
"""

from __future__ import annotations

import random
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import artmodel, container, defaults
from .customization import CustomizationResult, customize
from .manifest import AppManifest, ServiceCatalog, launcher_activity, write_manifest_file
from .simos import ApiCall, SimOs

NATIVE_ENV = "native"
NAIVE_ENV = "naive_container"
CLOAKED_ENV = "cloaked_container"
ENVIRONMENTS = (NATIVE_ENV, NAIVE_ENV, CLOAKED_ENV)


@dataclass
class MatrixScenario:
    """Parsed inputs a matrix run is built from."""

    victim: AppManifest
    template: AppManifest
    catalog: ServiceCatalog
    companion: AppManifest
    seed: int = defaults.DEFAULT_SEED
    store_counts: dict[str, int] = field(
        default_factory=lambda: dict(defaults.DEFAULT_STORE_COUNTS)
    )


def default_scenario(seed: int = defaults.DEFAULT_SEED) -> MatrixScenario:
    return MatrixScenario(
        victim=defaults.default_victim(),
        template=defaults.default_template(),
        catalog=defaults.default_catalog(),
        companion=defaults.default_companion(),
        seed=seed,
    )


def seed_stores(os: SimOs, counts: dict[str, int], seed: int) -> None:
    """Fill the data stores with deterministic opaque records."""
    rng = random.Random(seed)
    for store in sorted(counts):
        records = [
            f"{store}-{i:03d}-{rng.randrange(16 ** 6):06x}"
            for i in range(counts[store])
        ]
        os.seed_store(store, records)


@dataclass
class World:
    environment: str
    os: SimOs
    probe_pid: int
    probe_manifest: AppManifest
    runtime: artmodel.RuntimeModel
    container: container.ContainerState | None = None
    customization: CustomizationResult | None = None


class EnvHandle:
    """What a probe is allowed to see: its declared manifest, the call
    surface, and its process's runtime model. Nothing else."""

    def __init__(self, world: World):
        self._world = world
        self.declared = world.probe_manifest
        self.own_package = world.probe_manifest.package
        self.runtime = world.runtime

    def call(self, api_call: ApiCall):
        world = self._world
        if world.container is None:
            return world.os.syscall(world.probe_pid, api_call)
        return container.plugin_syscall(
            world.os, world.container, world.probe_pid, api_call
        )


def launch_native(os: SimOs, package: str) -> int:
    """Run an installed app the native way: own process, own maps, launcher up."""
    record = os.registry[package]
    pid = os.spawn_process(
        package,
        name=package,
        maps=[record.apk_path, f"/data/app/{package}/lib/libmain.so"],
    )
    launcher = launcher_activity(record.manifest)
    if launcher is not None:
        os.syscall(pid, ApiCall("start_activity", name=launcher.name))
    for native in sorted(record.manifest.native_components):
        os.syscall(pid, ApiCall("native_blob_write", name=native,
                                token=f"init:{package}"))
    return pid


def build_native_world(sc: MatrixScenario) -> World:
    os = SimOs()
    seed_stores(os, sc.store_counts, sc.seed)
    os.install(sc.victim)
    pid = launch_native(os, sc.victim.package)
    runtime = artmodel.RuntimeModel(artmodel.NATIVE)
    artmodel.warm_up(runtime)
    return World(NATIVE_ENV, os, pid, sc.victim, runtime)


def build_naive_world(sc: MatrixScenario) -> World:
    os = SimOs()
    seed_stores(os, sc.store_counts, sc.seed)
    os.install(sc.template)
    c = container.create_container(os, sc.template)
    plugin_root = c.plugin_data_root
    container.load_plugin(
        os, c, sc.companion, f"{plugin_root}/{sc.companion.package}/base.apk"
    )
    pid = container.load_plugin(
        os, c, sc.victim, f"{plugin_root}/{sc.victim.package}/base.apk"
    )
    runtime = artmodel.RuntimeModel(artmodel.VIRTUAL)
    artmodel.warm_up(runtime)
    return World(NAIVE_ENV, os, pid, sc.victim, runtime, container=c)


def build_cloaked_world(sc: MatrixScenario, with_hooks: bool = True,
                        drop_hook_labels: tuple[str, ...] = ()) -> World:
    """Customize, install, hook, and execute the first-run sequence.

    ``with_hooks=False`` or ``drop_hook_labels`` build degraded variants for
    measuring what each bypass hook contributes.
    """
    os = SimOs()
    seed_stores(os, sc.store_counts, sc.seed)
    os.install(sc.victim)
    launch_native(os, sc.victim.package)

    result = customize(sc.victim, sc.template, sc.catalog)
    os.install(result.addon)
    c = container.create_container(os, result.addon)
    if with_hooks:
        container.install_cloaking_hookset(c, sc.victim.package)
        if drop_hook_labels:
            container.uninstall_hooks(c, drop_hook_labels)

    with tempfile.TemporaryDirectory(prefix="catalog-") as catalog_dir:
        write_manifest_file(
            Path(catalog_dir) / f"{result.malicious.package}.json", result.malicious
        )
        container.first_run(os, c, sc.victim.package, catalog_dir)

    pid = c.plugin_processes[sc.victim.package]
    runtime = artmodel.RuntimeModel(artmodel.VIRTUAL)
    artmodel.warm_up(runtime)
    return World(CLOAKED_ENV, os, pid, sc.victim, runtime,
                 container=c, customization=result)


WORLD_BUILDERS = {
    NATIVE_ENV: build_native_world,
    NAIVE_ENV: build_naive_world,
    CLOAKED_ENV: build_cloaked_world,
}

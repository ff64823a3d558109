"""Synthetic victim-manifest corpus generation.

A corpus stands in for a set of real apps when benchmarking the
customization pipeline: seeded permission subsets of the catalog space,
one to twelve components per app, distinct packages. The same seed always
produces byte-identical files.
"""

from __future__ import annotations

import random
from pathlib import Path

from .manifest import (
    ACTIVITY,
    PROVIDER,
    RECEIVER,
    SERVICE,
    AppManifest,
    Component,
    write_manifest_file,
)
from .permissions import CATALOG_PERMISSIONS

MAX_COMPONENTS = 12


def corpus_manifest(index: int, rng: random.Random) -> AppManifest:
    package = f"org.corpus.app{index:04d}"
    pool = sorted(CATALOG_PERMISSIONS)
    permissions = frozenset(rng.sample(pool, rng.randint(0, len(pool))))

    total = rng.randint(1, MAX_COMPONENTS)
    activities = [Component(name=".GenMain", kind=ACTIVITY, launcher=True)]
    services: list[Component] = []
    receivers: list[Component] = []
    providers: list[Component] = []
    for j in range(total - 1):
        kind = rng.choice((ACTIVITY, SERVICE, RECEIVER, PROVIDER))
        if kind == ACTIVITY:
            activities.append(Component(name=f".GenActivity{j}", kind=ACTIVITY))
        elif kind == SERVICE:
            services.append(Component(name=f".GenService{j}", kind=SERVICE))
        elif kind == RECEIVER:
            receivers.append(Component(
                name=f".GenReceiver{j}", kind=RECEIVER,
                intents=(f"org.corpus.ACTION_{j}",),
            ))
        else:
            providers.append(Component(name=f".GenProvider{j}", kind=PROVIDER))

    return AppManifest(
        package=package,
        label=f"Corpus App {index:04d}",
        version=rng.randint(1, 99),
        permissions=permissions,
        activities=tuple(activities),
        services=tuple(services),
        receivers=tuple(receivers),
        providers=tuple(providers),
        launcher_icon="ic_launcher.png",
    )


def generate_corpus(count: int, seed: int, out_dir) -> list[Path]:
    """Write ``count`` victim manifests into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    paths = []
    for i in range(count):
        m = corpus_manifest(i, rng)
        path = out / f"{m.package}.json"
        write_manifest_file(path, m)
        paths.append(path)
    return paths

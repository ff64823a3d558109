import pytest
from hypothesis import given, strategies as st

from appvirtsim import permissions as perms
from appvirtsim.customization import (
    CustomizationInvariantError,
    customize,
    step1_permissions,
    step2_trim_malicious,
    step3_components,
    step4_resources,
    validate_result,
)
from appvirtsim.defaults import default_catalog, default_template, default_victim
from appvirtsim.manifest import (
    ACTIVITY,
    SERVICE,
    AppManifest,
    Component,
    NoLauncherError,
    extract_components,
    replace_manifest,
)

EXTRAS = set(perms.ADDON_EXTRA_PERMISSIONS)


def make_victim(permissions, label="QuickChat"):
    return replace_manifest(default_victim(), permissions=frozenset(permissions),
                            label=label)


def test_step1_replaces_template_permissions(victim, template):
    addon = step1_permissions(victim, template)
    assert addon.permissions == victim.permissions | EXTRAS
    assert addon.features == victim.features
    assert perms.BLUETOOTH not in addon.permissions  # all-permissions set gone


def test_step1_empty_victim(template):
    addon = step1_permissions(make_victim(set()), template)
    assert addon.permissions == frozenset(EXTRAS)


def test_step1_extras_are_set_union(template):
    addon = step1_permissions(make_victim({perms.INSTALL_SHORTCUT}), template)
    assert sorted(addon.permissions) == sorted(EXTRAS)


def _trim_oracle(victim, catalog):
    # Independent re-statement of the filter: keep entries whose required
    # permissions the victim declares, in catalog order.
    return [e.name for e in catalog.entries
            if set(e.requires_permissions) <= set(victim.permissions)]


def test_step2_filters_by_victim_permissions(catalog):
    victim = make_victim({perms.READ_CONTACTS, perms.READ_SMS, perms.INTERNET})
    malicious = step2_trim_malicious(victim, catalog)
    assert [s.payload for s in malicious.services] == ["contacts", "sms"]
    assert len(malicious.services) == len(_trim_oracle(victim, catalog))
    assert malicious.permissions == frozenset(
        {perms.READ_CONTACTS, perms.READ_SMS, perms.INTERNET})
    assert malicious.activities == () and malicious.providers == ()


def test_step2_internet_only_victim(catalog):
    malicious = step2_trim_malicious(make_victim({perms.INTERNET}), catalog)
    assert malicious.services == ()
    assert malicious.permissions == frozenset()


def test_step2_full_permission_victim(catalog):
    victim = make_victim(perms.CATALOG_PERMISSIONS)
    malicious = step2_trim_malicious(victim, catalog)
    assert len(malicious.services) == 8
    assert len(malicious.services) == len(_trim_oracle(victim, catalog))


def test_step2_renames_services_with_victim_label(catalog):
    victim = make_victim({perms.READ_CONTACTS, perms.INTERNET}, label="My Chat")
    malicious = step2_trim_malicious(victim, catalog)
    assert [s.name for s in malicious.services] == ["MyChatContactsService"]


def test_step3_stub_renaming(victim, template, catalog):
    malicious = step2_trim_malicious(victim, catalog)
    addon = step1_permissions(victim, template)
    merged, rename_map = step3_components(victim, malicious, addon)
    assert rename_map["PluginServiceManager"] == "QuickChatServiceManager"
    assert rename_map["PluginSetupActivity"] == "QuickChatSetupActivity"
    names = {c.name for c in merged.components()}
    assert {".MainActivity", ".SyncService", ".MsgReceiver",
            "QuickChatContactsService"} <= names


def test_step3_component_arithmetic():
    # 4 victim components + 2 payload services + 3 template components = 9.
    victim = AppManifest(
        package="org.small.app", label="Tiny",
        permissions={perms.READ_CONTACTS, perms.READ_SMS, perms.INTERNET},
        activities=(Component(name=".A", kind=ACTIVITY, launcher=True),),
        services=(Component(name=".S1", kind=SERVICE),
                  Component(name=".S2", kind=SERVICE)),
        providers=(Component(name=".P", kind="provider"),),
    )
    template = AppManifest(
        package="com.tiny.host", label="Host",
        permissions=perms.ALL_PERMISSIONS,
        activities=(Component(name="PluginSetup", kind=ACTIVITY, launcher=True),
                    Component(name="PluginStubA", kind=ACTIVITY, stub=True)),
        services=(Component(name="PluginStubS", kind=SERVICE, stub=True),),
    )
    malicious = step2_trim_malicious(victim, default_catalog())
    assert len(malicious.services) == 2
    addon = step1_permissions(victim, template)
    merged, _ = step3_components(victim, malicious, addon)
    assert len(merged.components()) == 9


def test_step3_collision_suffix():
    victim = AppManifest(
        package="org.tricky.app", label="Tricky",
        activities=(Component(name="TrickySetup", kind=ACTIVITY, launcher=True),),
    )
    template = AppManifest(
        package="com.tiny.host", label="Host",
        permissions=perms.ALL_PERMISSIONS,
        activities=(Component(name="PluginSetup", kind=ACTIVITY, launcher=True),),
    )
    malicious = step2_trim_malicious(victim, default_catalog())
    addon = step1_permissions(victim, template)
    merged, rename_map = step3_components(victim, malicious, addon)
    # The victim's name survives verbatim; the renamed stub gets suffixed.
    names = [c.name for c in merged.activities]
    assert "TrickySetup" in names
    assert rename_map["PluginSetup"] == "TrickySetup_c1"
    assert len(names) == len(set(names))


def test_step4_resources(victim, template):
    addon = step4_resources(victim, step1_permissions(victim, template))
    assert addon.shortcut_icon == "ic_launcher.png"
    assert addon.shortcut_label == "QuickChat"
    assert addon.launcher_icon == "ic_host.png"  # own install icon kept
    assert step4_resources(victim, addon) == addon  # idempotent


def test_step4_requires_launcher(template):
    no_launcher = AppManifest(package="org.bare.app", label="Bare")
    with pytest.raises(NoLauncherError):
        step4_resources(no_launcher, template)


def test_customize_end_to_end(victim, template, catalog):
    result = customize(victim, template, catalog)
    validate_result(victim, result)  # raises on any law violation
    assert result.addon.permissions == victim.permissions | EXTRAS
    assert result.malicious.permissions <= victim.permissions
    assert [e["step"] for e in result.report] == [
        "permissions", "trim_payload", "components", "resources",
    ]
    assert all(e["duration_ms"] >= 0 for e in result.report)


def test_customize_empty_permission_victim(template, catalog):
    victim = make_victim(set())
    result = customize(victim, template, catalog)
    assert result.addon.permissions == frozenset(EXTRAS)
    assert result.malicious.services == ()
    # addon components: victim's six plus the template's seven, zero payload
    assert len(result.addon.components()) == len(victim.components()) + 7


def test_customize_deterministic(victim, template, catalog):
    a = customize(victim, template, catalog)
    b = customize(victim, template, catalog)
    assert a.addon == b.addon
    assert a.malicious == b.malicious
    assert a.rename_map == b.rename_map


def test_validate_result_catches_violation(victim, template, catalog):
    result = customize(victim, template, catalog)
    result.addon = replace_manifest(
        result.addon, permissions=result.addon.permissions | {perms.CAMERA})
    with pytest.raises(CustomizationInvariantError):
        validate_result(victim, result)


# ---------------------------------------------------------------------------
# Law properties over random victims


@st.composite
def victims(draw):
    permissions = draw(st.frozensets(
        st.sampled_from(sorted(perms.CATALOG_PERMISSIONS | {perms.BLUETOOTH})),
        max_size=9))
    extra_services = draw(st.integers(0, 3))
    return AppManifest(
        package="org.rand.app",
        label=draw(st.sampled_from(["Rand", "Rand App", "X Y Z"])),
        permissions=permissions,
        activities=(Component(name=".Root", kind=ACTIVITY, launcher=True),),
        services=tuple(Component(name=f".Svc{i}", kind=SERVICE)
                       for i in range(extra_services)),
    )


@given(victims())
def test_permission_set_law(v):
    result = customize(v, default_template(), default_catalog())
    assert result.addon.permissions == v.permissions | EXTRAS


@given(victims())
def test_least_privilege_law(v):
    result = customize(v, default_template(), default_catalog())
    assert result.malicious.permissions <= v.permissions


@given(victims())
def test_component_embedding_law(v):
    result = customize(v, default_template(), default_catalog())
    addon_pairs = [(c.kind, c.name) for c in result.addon.components()]
    for kind, name in extract_components(v):
        assert addon_pairs.count((kind, name)) == 1

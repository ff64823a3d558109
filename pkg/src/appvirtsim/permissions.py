"""Permission names and the data stores they guard.

The simulator works with a fixed, small permission space: eight dangerous
permissions (each tied to a sensitive payload), a handful of normal ones,
and the two extras an add-on needs to plant a shortcut and stop a process.
"""

_PREFIX = "android.permission."

READ_CONTACTS = _PREFIX + "READ_CONTACTS"
READ_SMS = _PREFIX + "READ_SMS"
RECEIVE_SMS = _PREFIX + "RECEIVE_SMS"
READ_PHONE_STATE = _PREFIX + "READ_PHONE_STATE"
READ_CALL_LOG = _PREFIX + "READ_CALL_LOG"
CAMERA = _PREFIX + "CAMERA"
RECORD_AUDIO = _PREFIX + "RECORD_AUDIO"
ACCESS_FINE_LOCATION = _PREFIX + "ACCESS_FINE_LOCATION"

INTERNET = _PREFIX + "INTERNET"
BLUETOOTH = _PREFIX + "BLUETOOTH"
BLUETOOTH_ADMIN = _PREFIX + "BLUETOOTH_ADMIN"
ACCESS_NETWORK_STATE = _PREFIX + "ACCESS_NETWORK_STATE"
VIBRATE = _PREFIX + "VIBRATE"
WAKE_LOCK = _PREFIX + "WAKE_LOCK"
INSTALL_SHORTCUT = _PREFIX + "INSTALL_SHORTCUT"
KILL_BACKGROUND_PROCESSES = _PREFIX + "KILL_BACKGROUND_PROCESSES"

# The fixed list of eight treated as dangerous; everything else is normal.
DANGEROUS_PERMISSIONS = frozenset({
    READ_CONTACTS,
    READ_SMS,
    RECEIVE_SMS,
    READ_PHONE_STATE,
    READ_CALL_LOG,
    CAMERA,
    RECORD_AUDIO,
    ACCESS_FINE_LOCATION,
})

NORMAL_PERMISSIONS = frozenset({
    INTERNET,
    BLUETOOTH,
    BLUETOOTH_ADMIN,
    ACCESS_NETWORK_STATE,
    VIBRATE,
    WAKE_LOCK,
    INSTALL_SHORTCUT,
    KILL_BACKGROUND_PROCESSES,
})

# What a permissive container template declares: the full simulated space.
ALL_PERMISSIONS = DANGEROUS_PERMISSIONS | NORMAL_PERMISSIONS

# Extras an add-on needs on top of the victim's set.
ADDON_EXTRA_PERMISSIONS = frozenset({INSTALL_SHORTCUT, KILL_BACKGROUND_PROCESSES})

# Data store name -> permission guarding it. This mapping is fixed.
STORE_GUARDS = {
    "contacts": READ_CONTACTS,
    "sms": READ_SMS,
    "call_log": READ_CALL_LOG,
    "phone_state": READ_PHONE_STATE,
    "location": ACCESS_FINE_LOCATION,
    "camera_roll": CAMERA,
    "audio": RECORD_AUDIO,
}

STORE_NAMES = tuple(sorted(STORE_GUARDS))

# Payload tag carried by a catalog service -> data store it reads.
# The SMS interceptor reads the same store as the SMS reader but reports
# under its own tag so the two flows stay distinguishable in the sink.
PAYLOAD_STORES = {
    "contacts": "contacts",
    "sms": "sms",
    "sms_intercept": "sms",
    "call_log": "call_log",
    "phone_state": "phone_state",
    "location": "location",
    "camera_roll": "camera_roll",
    "audio": "audio",
}

# The nine permissions the default payload catalog spans.
CATALOG_PERMISSIONS = DANGEROUS_PERMISSIONS | {INTERNET}

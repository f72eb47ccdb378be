# Storage derivation package
from schema.storage import (
    OID,
    SetLayout,
    derive_storage,
    has_storage,
    layout_for,
    rebuild_constraints,
    root_name,
    set_relation_name,
    storage_for,
    stored_members,
    sync_storage,
    top_layout,
)

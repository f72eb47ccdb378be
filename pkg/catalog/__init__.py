# Catalog package
from catalog.model import (
    Catalog,
    ClassSpec,
    MemberKind,
    MemberSpec,
    NameEntry,
    Realization,
    RealizationKind,
    ReferenceSpec,
)
from catalog.registry import (
    PathDescriptor,
    PathStep,
    active_realization,
    catalog_of,
    class_names,
    class_spec_from_ast,
    define_class,
    descendants,
    describe_class,
    extent_classes,
    find_member,
    get_class,
    has_class,
    is_stored,
    linearize,
    lookup_path,
    new_database,
    realization_from_ast,
    record_ddl,
    register_realization,
    resolve_interface,
)

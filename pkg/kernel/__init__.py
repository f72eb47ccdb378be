# Relational machine package
from kernel.values import (
    BOOLEAN,
    DATETIME,
    FLOAT,
    INTEGER,
    STRING,
    BaseKind,
    Kind,
    check_value,
    coerce,
    parse_kind,
    ref,
)
from kernel.relation import Attribute, Header, Relation, Row, sorted_rows
from kernel.predicates import TRUE, And, AttrCmp, Cmp, In, IsNull, Not, Or, Predicate, Where, compare, equals
from kernel.algebra import (
    AggregateSpec,
    r_aggregate,
    r_cast,
    r_difference,
    r_extend,
    r_join,
    r_left_join,
    r_product,
    r_project,
    r_rename,
    r_select,
    r_semijoin,
    r_union,
    r_union_all,
)
from kernel.database import (
    Database,
    Delete,
    ForeignKey,
    Insert,
    StoredRelation,
    UniqueConstraint,
    Update,
    apply_mutation,
    apply_mutations,
    check_constraints,
    replace_body,
    scan_violations,
)

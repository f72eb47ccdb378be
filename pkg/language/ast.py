"""Abstract syntax tree of the RxO language.

Nodes are frozen dataclasses. ``pos`` is the (line, column) of the node's
first token; it is excluded from equality so that structurally identical
trees compare equal regardless of layout.
"""

from dataclasses import dataclass, field
from typing import Any, Optional, Tuple, Union

from kernel.values import SCALAR_KINDS

Position = Optional[Tuple[int, int]]


def _pos():
    return field(default=None, compare=False, repr=False)


# Expressions

@dataclass(frozen=True)
class Literal:
    """Constant; ``kind`` is a scalar kind name or ``NULL``."""
    value: Any
    kind: str
    pos: Position = _pos()


@dataclass(frozen=True)
class Segment:
    """One path step: a component name (``#`` for the OID) and an optional selection."""
    name: str
    predicate: Optional["Expr"] = None
    pos: Position = _pos()


@dataclass(frozen=True)
class Path:
    """A dotted name sequence.

    ``anchor`` is ``dot`` for ``.A.B`` (relative to the current row),
    ``alias`` for ``#g.A`` and ``bare`` for ``A.B`` (context member or class).
    """
    anchor: str
    segments: Tuple[Segment, ...]
    alias: Optional[str] = None
    pos: Position = _pos()

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.segments)

    @property
    def has_predicates(self) -> bool:
        return any(s.predicate is not None for s in self.segments)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: Position = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Position = _pos()


@dataclass(frozen=True)
class IsNullTest:
    operand: "Expr"
    negated: bool = False
    pos: Position = _pos()


@dataclass(frozen=True)
class Aggregate:
    """``fn(arg)``; ``arg`` is None for ``COUNT(*)``."""
    fn: str
    arg: Optional["Expr"]
    pos: Position = _pos()


@dataclass(frozen=True)
class Init:
    """``.component := value`` inside NEW or UPDATE."""
    target: Path
    value: "Expr"
    pos: Position = _pos()


@dataclass(frozen=True)
class NewExpr:
    class_name: str
    inits: Tuple[Init, ...] = ()
    pos: Position = _pos()


@dataclass(frozen=True)
class SubSelect:
    select: "Select"
    pos: Position = _pos()


@dataclass(frozen=True)
class MethodCall:
    """``target.method(args)``; ``target`` selects the receiving objects."""
    target: Path
    method: str
    args: Tuple["Expr", ...] = ()
    pos: Position = _pos()


Expr = Union[Literal, Path, Unary, Binary, IsNullTest, Aggregate, NewExpr, SubSelect]


# Class declarations

@dataclass(frozen=True)
class TypeRef:
    """A scalar kind name (normalized to upper case) or a class name."""
    name: str
    pos: Position = _pos()

    @property
    def is_scalar(self) -> bool:
        return self.name in SCALAR_KINDS


@dataclass(frozen=True)
class AttrDecl:
    name: str
    type: TypeRef
    pos: Position = _pos()


@dataclass(frozen=True)
class SetMember:
    name: str
    members: Tuple[Union[AttrDecl, "SetMember"], ...]
    key: Tuple[str, ...] = ()
    pos: Position = _pos()


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeRef
    pos: Position = _pos()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: Tuple[Param, ...] = ()
    returns: Optional[TypeRef] = None
    pos: Position = _pos()


Member = Union[AttrDecl, SetMember, MethodDecl]


@dataclass(frozen=True)
class ReferenceClause:
    """``REFERENCE Items(.Art) ON GOODS(.Art)``."""
    component: Tuple[str, ...]
    attrs: Tuple[str, ...]
    target: str
    target_attrs: Tuple[str, ...]
    pos: Position = _pos()


# Statements

@dataclass(frozen=True)
class CreateClass:
    name: str
    parents: Tuple[str, ...] = ()
    members: Tuple[Member, ...] = ()
    key: Tuple[str, ...] = ()
    references: Tuple[ReferenceClause, ...] = ()
    pos: Position = _pos()


@dataclass(frozen=True)
class StoredBody:
    pos: Position = _pos()


@dataclass(frozen=True)
class QueryBody:
    select: "Select"
    pos: Position = _pos()


@dataclass(frozen=True)
class ProcedureBody:
    block: "Block"
    pos: Position = _pos()


RealizationBody = Union[StoredBody, QueryBody, ProcedureBody]


@dataclass(frozen=True)
class AlterRealize:
    class_name: str
    targets: Tuple[str, ...]
    body: RealizationBody
    params: Optional[Tuple[Param, ...]] = None
    pos: Position = _pos()


@dataclass(frozen=True)
class New:
    expr: NewExpr
    pos: Position = _pos()


@dataclass(frozen=True)
class Destroy:
    target: Path
    pos: Position = _pos()


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: Optional[str] = None
    pos: Position = _pos()


@dataclass(frozen=True)
class Select:
    """``items`` is empty for ``SELECT *``."""
    items: Tuple[SelectItem, ...]
    source: Path
    alias: Optional[str] = None
    where: Optional[Expr] = None
    group_by: Tuple[Expr, ...] = ()
    pos: Position = _pos()

    @property
    def star(self) -> bool:
        return not self.items


@dataclass(frozen=True)
class Exec:
    call: MethodCall
    pos: Position = _pos()


@dataclass(frozen=True)
class Insert:
    target: Path
    rows: Tuple[Tuple[Expr, ...], ...]
    columns: Tuple[str, ...] = ()
    pos: Position = _pos()


@dataclass(frozen=True)
class Delete:
    target: Path
    where: Optional[Expr] = None
    pos: Position = _pos()


@dataclass(frozen=True)
class Update:
    target: Path
    assignments: Tuple[Init, ...]
    pos: Position = _pos()


# Procedure statements

@dataclass(frozen=True)
class Declare:
    name: str
    type: TypeRef
    pos: Position = _pos()


@dataclass(frozen=True)
class Assign:
    target: Path
    value: Expr
    pos: Position = _pos()


@dataclass(frozen=True)
class If:
    condition: Expr
    then: "ProcStatement"
    otherwise: Optional["ProcStatement"] = None
    pos: Position = _pos()


@dataclass(frozen=True)
class Block:
    statements: Tuple["ProcStatement", ...] = ()
    pos: Position = _pos()


@dataclass(frozen=True)
class Return:
    value: Expr
    pos: Position = _pos()


ProcStatement = Union[Declare, Assign, If, Block, Return]
Statement = Union[CreateClass, AlterRealize, New, Destroy, Select, Exec, Insert, Delete, Update]

"""Exception hierarchy shared by every RxO module."""

from typing import Iterable, Optional, Tuple


class RxOError(Exception):
    """Base class for all errors raised by the engine.

    ``position`` is a ``(line, column)`` pair into the statement source when
    the error can be traced back to one.
    """

    def __init__(self, message: str, position: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.message = message
        self.position = position

    @property
    def code(self) -> str:
        return type(self).__name__

    def at(self, position: Optional[Tuple[int, int]]) -> "RxOError":
        """Attach a position unless one is already known."""
        if self.position is None and position is not None:
            self.position = position
        return self

    def __str__(self) -> str:
        if self.position is None:
            return f"{self.code}: {self.message}"
        line, column = self.position
        return f"line {line}, column {column}: {self.code}: {self.message}"


# Language

class LanguageError(RxOError):
    pass


class LexError(LanguageError):
    pass


class ParseError(LanguageError):
    def __init__(
        self,
        message: str,
        position: Optional[Tuple[int, int]] = None,
        expected: Iterable[str] = (),
    ):
        super().__init__(message, position)
        self.expected = tuple(sorted(set(expected)))


# Relational machine

class KernelError(RxOError):
    pass


class UnknownAttribute(KernelError):
    pass


class KindMismatch(KernelError):
    pass


class HeaderMismatch(KernelError):
    pass


class DuplicateOutName(KernelError):
    pass


class UnknownRelation(KernelError):
    pass


class ConstraintViolation(KernelError):
    pass


class KeyViolation(ConstraintViolation):
    pass


class ForeignKeyViolation(ConstraintViolation):
    pass


# Catalog and schema

class SchemaError(RxOError):
    pass


class DuplicateClass(SchemaError):
    pass


class UnknownParent(SchemaError):
    pass


class UnknownClass(SchemaError):
    pass


class MemberCollision(SchemaError):
    pass


class CyclicInheritance(SchemaError):
    pass


class AmbiguousMember(SchemaError):
    pass


class InheritanceConflict(SchemaError):
    pass


class UnknownMember(SchemaError):
    pass


class StoredDataLoss(SchemaError):
    pass


class UnknownName(SchemaError):
    pass


class NotTraversable(SchemaError):
    pass


class AlreadyStored(SchemaError):
    pass


class NotStored(SchemaError):
    pass


class MissingComponentKey(SchemaError):
    pass


# Query

class QueryError(RxOError):
    pass


class TerminalScalarPath(QueryError):
    pass


class UnrealizedComponent(QueryError):
    pass


class AggregateMisuse(QueryError):
    pass


class CycleDepthExceeded(QueryError):
    pass


class ProcedureNoReturn(QueryError):
    pass


class CardinalityViolation(QueryError):
    pass


class CyclicRealization(QueryError):
    pass


# Runtime

class RuntimeFault(RxOError):
    pass


class UnknownComponent(RuntimeFault):
    pass


class AssignToCalculated(RuntimeFault):
    pass


class NonCompilableBody(RuntimeFault):
    pass


class ArgumentMismatch(RuntimeFault):
    pass


# Persistence

class SnapshotError(RxOError):
    pass


class FormatError(SnapshotError):
    pass


class ConstraintError(SnapshotError):
    pass


class CounterError(SnapshotError):
    pass


class IoError(SnapshotError):
    pass

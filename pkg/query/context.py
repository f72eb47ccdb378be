"""Evaluation context shared by the O-view engine."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Set, Tuple

from catalog.registry import PathStep
from config import settings
from kernel.database import Database
from kernel.relation import Relation
from kernel.values import Kind

HOST = "@"
ROWS = ""


@dataclass
class QueryContext:
    """One read-only evaluation over a database snapshot.

    Materialized calculated components are cached per context; ``active``
    tracks components under evaluation to detect realization cycles.
    Sub-selects read from ``snapshot`` when one is set.
    """
    db: Database
    max_depth: int = field(default_factory=lambda: settings.max_expansion_depth)
    cache: Dict[Any, Relation] = field(default_factory=dict)
    active: Set[Tuple[str, str]] = field(default_factory=set)
    snapshot: Optional["QueryContext"] = None


@dataclass(frozen=True)
class Env:
    """Name bindings for one expression scope.

    ``host`` is a relation with an ``@.#`` column listing the host objects of
    class ``host_class`` (the object a realization or method runs for);
    ``constants`` holds parameters and scalar locals shared by every host;
    ``host_locals`` names per-host locals stored as ``@$name`` columns of
    ``host``; ``scope`` and ``alias`` describe the FROM rows.
    """
    host_class: Optional[str] = None
    host: Optional[Relation] = None
    constants: Dict[str, Tuple[Any, Kind]] = field(default_factory=dict)
    host_locals: Dict[str, Kind] = field(default_factory=dict)
    scope: Optional[PathStep] = None
    alias: Optional[str] = None
    # set names from the owning class down when the FROM rows are set rows
    set_path: Tuple[str, ...] = ()

    def with_rows(self, scope: Optional[PathStep], alias: Optional[str] = None, set_path: Tuple[str, ...] = ()) -> "Env":
        return replace(self, scope=scope, alias=alias, set_path=set_path)

    def without_host(self) -> "Env":
        return Env(constants=self.constants)

    @property
    def host_scope(self) -> Optional[PathStep]:
        if self.host_class is None:
            return None
        return PathStep(self.host_class, "class", self.host_class, None)


def local_column(name: str) -> str:
    return f"{HOST}${name}"

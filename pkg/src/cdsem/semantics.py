"""Semantic domain: values, snapshots, the satisfaction check and the
bounded meaning function.

A snapshot is one system state: a finite set of object identities, each
mapped to an object state (classifier plus attribute valuation).  Links are
not stored; they are derived from object-valued attributes keyed by
association-end names.

``enumerate_models`` realizes the meaning function at finite scope: it
generates every candidate snapshot over a bounded object pool and data
pool, restricted to the attribute names the model can constrain, and keeps
exactly those that satisfy the model.  The candidate frame is part of the
contract (the acceptance oracle regenerates it independently):

* every subset of the object pool may be live;
* each live object takes any classifier of the model;
* each inherited-inclusive declared attribute takes exactly one data value
  (a classifier with declared attributes is uninstantiable at data pool 0);
* each applicable association-end name is present and takes any subset of
  the live objects as link targets - including the empty subset, which is
  presence without links (how a count of zero satisfies a 0-admitting
  multiplicity).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import IllFormedModelError, ScopeTooLargeError, UnknownClassifierError
from .syntax import StaticModel, _view

#: Enumeration refuses scopes whose raw candidate count exceeds this many
#: snapshots unless the caller overrides the limit.
DEFAULT_GUARD_LIMIT = 10_000_000


class ValueKind(Enum):
    OBJECT = "object"
    DATA = "data"


@dataclass(frozen=True, slots=True)
class Value:
    """An atomic semantic value: an object identity or a data constant.

    Values of different kinds never compare equal; ``index`` is the
    position in the respective pool.
    """

    kind: ValueKind
    index: int

    @property
    def key(self) -> tuple[int, int]:
        return (0 if self.kind is ValueKind.OBJECT else 1, self.index)

    @property
    def label(self) -> str:
        return f"{'o' if self.kind is ValueKind.OBJECT else 'd'}{self.index}"

    def __repr__(self) -> str:  # compact in test diffs
        return self.label


def obj_value(index: int) -> Value:
    return Value(ValueKind.OBJECT, index)


def data_value(index: int) -> Value:
    return Value(ValueKind.DATA, index)


AttrSpec = Union[
    Mapping[str, Iterable[Value]],
    Iterable[tuple[str, Iterable[Value]]],
]


@dataclass(frozen=True, slots=True)
class ObjectState:
    """Classifier plus attribute valuation of one object.

    ``attributes`` maps each present attribute name to a sorted set of
    values.  One name may carry several values (the relational reading) or
    none at all: an empty value set means the attribute is present but
    currently links to nothing.
    """

    classifier: str
    attributes: tuple[tuple[str, tuple[Value, ...]], ...]

    def __init__(self, classifier: str, attributes: AttrSpec = ()):
        items = attributes.items() if isinstance(attributes, Mapping) else attributes
        merged: dict[str, set[Value]] = {}
        for name, values in items:
            merged.setdefault(name, set()).update(values)
        canon = tuple(
            (name, tuple(sorted(merged[name], key=lambda v: v.key)))
            for name in sorted(merged)
        )
        object.__setattr__(self, "classifier", classifier)
        object.__setattr__(self, "attributes", canon)

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    def values_of(self, name: str) -> Optional[tuple[Value, ...]]:
        for n, values in self.attributes:
            if n == name:
                return values
        return None


@dataclass(frozen=True, slots=True)
class Snapshot:
    """A finite map from object identities to object states.

    The map key is the object's identity (there is no separate ``self``
    field, so identity consistency holds by construction).  Object-valued
    attributes must reference live identities: dangling references would
    make link counting ambiguous.
    """

    objects: tuple[tuple[Value, ObjectState], ...]

    def __init__(self, objects: Union[Mapping[Value, ObjectState], Iterable[tuple[Value, ObjectState]]] = ()):
        items = list(objects.items() if isinstance(objects, Mapping) else objects)
        ids = set()
        for v, _state in items:
            if v.kind is not ValueKind.OBJECT:
                raise ValueError(f"snapshot key {v.label} is not an object identity")
            if v in ids:
                raise ValueError(f"duplicate object identity {v.label}")
            ids.add(v)
        for v, state in items:
            for _name, values in state.attributes:
                for t in values:
                    if t.kind is ValueKind.OBJECT and t not in ids:
                        raise ValueError(
                            f"dangling object reference {t.label} in attributes of {v.label}"
                        )
        items.sort(key=lambda pair: pair[0].key)
        object.__setattr__(self, "objects", tuple(items))

    def object_ids(self) -> tuple[Value, ...]:
        return tuple(v for v, _ in self.objects)

    def state_of(self, identity: Value) -> Optional[ObjectState]:
        for v, state in self.objects:
            if v == identity:
                return state
        return None

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def sort_key(self) -> tuple:
        return tuple(
            (
                v.index,
                state.classifier,
                tuple(
                    (name, tuple(t.key for t in values))
                    for name, values in state.attributes
                ),
            )
            for v, state in self.objects
        )


EMPTY_SNAPSHOT = Snapshot()


@dataclass(frozen=True, slots=True)
class Scope:
    """Finite universe bounds: size of the object-identity pool and number
    of distinct data values available to declared attributes."""

    max_objects: int
    data_pool: int

    def __post_init__(self):
        if self.max_objects < 0 or self.data_pool < 0:
            raise ValueError("scope bounds must be non-negative")


class Mode(Enum):
    """Satisfaction flavor.

    STRICT_PAPER checks clauses S1..S4 only; link targets are untyped.
    TYPED adds S5: link targets under an end name must be instances of the
    opposite end's classifier.
    """

    STRICT_PAPER = "strict-paper"
    TYPED = "typed"


@dataclass(frozen=True, slots=True)
class ClauseViolation:
    clause: str  # S1..S5
    subject: str
    message: str


@dataclass(frozen=True, slots=True)
class SatisfactionVerdict:
    violations: tuple[ClauseViolation, ...]

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def clause_ids(self) -> tuple[str, ...]:
        return tuple(sorted({v.clause for v in self.violations}))


def derive_links(snapshot: Snapshot) -> dict:
    """Links per attribute name: ``(o1, o2)`` pairs where ``o2`` is an
    object-valued attribute of ``o1`` under that name.  Data values derive
    no links; names with no pairs are absent from the result."""
    links: dict[str, set[tuple[Value, Value]]] = {}
    for v, state in snapshot.objects:
        for name, values in state.attributes:
            for t in values:
                if t.kind is ValueKind.OBJECT:
                    links.setdefault(name, set()).add((v, t))
    return {name: frozenset(pairs) for name, pairs in links.items()}


def extent(model: StaticModel, snapshot: Snapshot, classifier: str) -> frozenset:
    """Objects that are instances of ``classifier``, including instances of
    its descendants."""
    view = _view(model)
    if classifier not in view.classifier_set:
        raise UnknownClassifierError(f"unknown classifier {classifier!r}")
    members = {classifier} | view.descendants[classifier]
    return frozenset(v for v, state in snapshot.objects if state.classifier in members)


def _require_well_formed(model: StaticModel, what: str) -> None:
    report = _view(model).report
    if not report.ok:
        rules = ", ".join(report.rule_ids())
        raise IllFormedModelError(f"{what} is not well-formed (violates {rules})")


def satisfies(model: StaticModel, snapshot: Snapshot, mode: Mode = Mode.STRICT_PAPER) -> SatisfactionVerdict:
    """Clause-by-clause satisfaction check of a snapshot against a
    well-formed model.

    S1: every object's classifier is a declared, non-abstract classifier.
    S2: every object carries at least the inherited-inclusive attributes of
        its classifier.
    S3: for every association end and every object in the end classifier's
        extent, the end name is present and the object's outgoing link
        count under that name lies in the end's multiplicity.
    S4: subtype extents are included in supertype extents (holds by
        construction; asserted).
    S5 (TYPED only): link targets under an end name are instances of the
        opposite end's classifier.
    """
    view = _view(model)
    _require_well_formed(model, "model")
    violations: list[ClauseViolation] = []
    states = dict(snapshot.objects)

    for v, state in snapshot.objects:
        c = state.classifier
        if c not in view.concrete_set:
            why = "abstract classifier" if c in view.classifier_set else "unknown classifier"
            violations.append(
                ClauseViolation("S1", v.label, f"object assigned to {why} {c}")
            )
        if c not in view.classifier_set:
            continue  # S2/S3/S5 are meaningless without a declared classifier

        present = {name for name, _ in state.attributes}
        for missing in sorted(view.all_attrs[c] - present):
            violations.append(
                ClauseViolation("S2", v.label, f"missing attribute {missing!r} required by {c}")
            )

        for info in view.applicable_ends[c]:
            values = state.values_of(info.end_name)
            if values is None:
                violations.append(
                    ClauseViolation(
                        "S3",
                        f"{v.label}.{info.end_name}",
                        f"association end attribute missing (association {info.assoc_name})",
                    )
                )
                continue
            count = sum(1 for t in values if t.kind is ValueKind.OBJECT)
            if count not in info.multi:
                violations.append(
                    ClauseViolation(
                        "S3",
                        f"{v.label}.{info.end_name}",
                        f"link count {count} not in {info.multi.text()} (association {info.assoc_name})",
                    )
                )
            if mode is Mode.TYPED:
                for t in values:
                    if t.kind is ValueKind.OBJECT and states[t].classifier not in info.opposite_instances:
                        violations.append(
                            ClauseViolation(
                                "S5",
                                f"{v.label}.{info.end_name} -> {t.label}",
                                f"link target is a {states[t].classifier}, not an instance of "
                                f"{info.opposite_classifier} (association {info.assoc_name})",
                            )
                        )

    # S4: extent inclusion along every generalization edge.
    for sup, sub in model.supertype_of:
        sub_ext = extent(model, snapshot, sub)
        sup_ext = extent(model, snapshot, sup)
        for v in sorted(sub_ext - sup_ext, key=lambda v: v.key):
            violations.append(
                ClauseViolation("S4", v.label, f"in extent of {sub} but not of its supertype {sup}")
            )

    violations.sort(key=lambda v: (v.clause, v.subject, v.message))
    return SatisfactionVerdict(tuple(violations))


def _frame(model: StaticModel):
    """Per-classifier attribute frame: (sorted declared-inclusive data
    attribute names, sorted applicable end names)."""
    view = _view(model)
    frame = {}
    for c in model.classifiers:
        data_names = tuple(sorted(view.all_attrs[c]))
        end_names = tuple(sorted({info.end_name for info in view.applicable_ends[c]}))
        frame[c] = (data_names, end_names)
    return frame


def count_candidates(model: StaticModel, scope: Scope) -> int:
    """Exact number of raw candidate snapshots the enumeration frame spans."""
    frame = _frame(model)
    n, d = scope.max_objects, scope.data_pool
    total = 0
    for k in range(n + 1):
        per_object = 0
        for data_names, end_names in frame.values():
            per_object += (d ** len(data_names)) * ((2**k) ** len(end_names))
        total += comb(n, k) * (per_object**k)
    return total


def _subsets(pool: tuple[Value, ...]) -> list[tuple[Value, ...]]:
    out: list[tuple[Value, ...]] = []
    for size in range(len(pool) + 1):
        out.extend(itertools.combinations(pool, size))
    return out


def _states_for(classifier: str, frame, live: tuple[Value, ...], data_values) -> list[ObjectState]:
    data_names, end_names = frame[classifier]
    if data_names and not data_values:
        return []
    option_lists = []
    for name in data_names:
        option_lists.append([(name, (dv,)) for dv in data_values])
    target_subsets = _subsets(live)
    for name in end_names:
        option_lists.append([(name, subset) for subset in target_subsets])
    states = []
    for combo in itertools.product(*option_lists):
        states.append(ObjectState(classifier, combo))
    return states


def _candidates(model: StaticModel, scope: Scope) -> Iterator[Snapshot]:
    frame = _frame(model)
    pool = tuple(obj_value(i) for i in range(scope.max_objects))
    data_values = tuple(data_value(i) for i in range(scope.data_pool))
    classifiers = model.classifiers
    for live in _subsets(pool):
        if not live:
            yield EMPTY_SNAPSHOT
            continue
        states: list[ObjectState] = []
        for c in classifiers:
            states.extend(_states_for(c, frame, live, data_values))
        for assignment in itertools.product(states, repeat=len(live)):
            yield Snapshot(tuple(zip(live, assignment)))


def _chunked(iterator: Iterator, size: int) -> Iterator[list]:
    while True:
        chunk = list(itertools.islice(iterator, size))
        if not chunk:
            return
        yield chunk


def enumerate_models(
    model: StaticModel,
    scope: Scope,
    mode: Mode = Mode.STRICT_PAPER,
    *,
    workers: int = 1,
    max_candidates: Optional[int] = DEFAULT_GUARD_LIMIT,
) -> tuple[Snapshot, ...]:
    """All satisfying snapshots over the scope's candidate frame, in
    canonical order.

    Exactly filter-of-generate: a snapshot is in the result iff it is a
    raw candidate and ``satisfies`` accepts it.  The result is identical
    (including order) for every worker count.
    """
    _require_well_formed(model, "model")
    raw = count_candidates(model, scope)
    if max_candidates is not None and raw > max_candidates:
        raise ScopeTooLargeError(
            f"scope spans {raw} candidate snapshots, above the guard limit {max_candidates}"
        )

    candidates = _candidates(model, scope)
    if workers <= 1:
        kept = [s for s in candidates if satisfies(model, s, mode).satisfied]
    else:
        def filter_chunk(chunk: list[Snapshot]) -> list[Snapshot]:
            return [s for s in chunk if satisfies(model, s, mode).satisfied]

        kept = []
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            for part in pool_exec.map(filter_chunk, _chunked(candidates, 512)):
                kept.extend(part)
    kept.sort(key=lambda s: s.sort_key)
    return tuple(kept)

"""Abstract syntax of class diagrams and its well-formedness rules.

A :class:`StaticModel` holds classifiers, an abstract subset, declared
attributes, binary associations and a generalization relation.  All values
are immutable and stored in canonical (lexicographically sorted) form, so
structural equality and report output are deterministic regardless of the
order in which a model was assembled.

Well-formedness is diagnosed, not raised: :func:`well_formed` returns a
report listing every violated rule WF1..WF8.  Only referential integrity
that no WF rule covers (attribute entries and generalization pairs naming
undeclared classifiers) is rejected at construction time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Union

from .errors import UnknownClassifierError

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

#: Upper bound marker for an open multiplicity range.
UNBOUNDED = None


def is_valid_name(text: str) -> bool:
    return isinstance(text, str) and _NAME_RE.match(text) is not None


def _require_name(text: str, what: str) -> str:
    if not is_valid_name(text):
        raise ValueError(f"invalid {what} {text!r}: expected letter followed by letters, digits or underscores")
    return text


@dataclass(frozen=True, slots=True)
class Multiplicity:
    """A finite union of integer ranges of permitted link counts.

    ``ranges`` is kept canonical: sorted ascending, pairwise disjoint and
    non-adjacent, each ``lo <= hi`` (``hi`` may be :data:`UNBOUNDED`).
    Overlapping or adjacent input ranges are merged; an empty union is
    rejected because it would silently make every populated extent
    unsatisfiable.
    """

    ranges: tuple[tuple[int, Optional[int]], ...]

    def __init__(self, ranges: Iterable[tuple[int, Optional[int]]]):
        normalized = _normalize_ranges(ranges)
        object.__setattr__(self, "ranges", normalized)

    @classmethod
    def between(cls, lo: int, hi: Optional[int]) -> "Multiplicity":
        return cls(((lo, hi),))

    @classmethod
    def exactly(cls, n: int) -> "Multiplicity":
        return cls(((n, n),))

    @classmethod
    def at_least(cls, n: int) -> "Multiplicity":
        return cls(((n, UNBOUNDED),))

    def __contains__(self, count: int) -> bool:
        for lo, hi in self.ranges:
            if count < lo:
                return False
            if hi is UNBOUNDED or count <= hi:
                return True
        return False

    def covers(self, other: "Multiplicity") -> bool:
        """True when ``other`` is a subset of this multiplicity.

        Canonical ranges are non-adjacent, so a contiguous range of
        ``other`` can never straddle two ranges of ``self``; a per-range
        single-cover scan is exact.
        """
        for lo, hi in other.ranges:
            if not any(
                slo <= lo and (shi is UNBOUNDED or (hi is not UNBOUNDED and hi <= shi))
                for slo, shi in self.ranges
            ):
                return False
        return True

    def text(self) -> str:
        parts = []
        for lo, hi in self.ranges:
            parts.append(f"{lo}..{'*' if hi is UNBOUNDED else hi}")
        return "[" + ", ".join(parts) + "]"

    def __str__(self) -> str:
        return self.text()


def _normalize_ranges(
    ranges: Iterable[tuple[int, Optional[int]]],
) -> tuple[tuple[int, Optional[int]], ...]:
    items = list(ranges)
    if not items:
        raise ValueError("multiplicity must contain at least one range")
    for lo, hi in items:
        if not isinstance(lo, int) or lo < 0:
            raise ValueError(f"multiplicity lower bound must be a natural number, got {lo!r}")
        if hi is not UNBOUNDED and (not isinstance(hi, int) or hi < lo):
            raise ValueError(f"empty multiplicity range {lo}..{hi}")
    items.sort(key=lambda r: (r[0], -1 if r[1] is UNBOUNDED else r[1]))
    merged: list[list[Optional[int]]] = []
    for lo, hi in items:
        if merged:
            plo, phi = merged[-1]
            if phi is UNBOUNDED or lo <= phi + 1:  # overlap or adjacency
                if phi is not UNBOUNDED and (hi is UNBOUNDED or hi > phi):
                    merged[-1][1] = hi
                continue
        merged.append([lo, hi])
    return tuple((int(lo), hi if hi is UNBOUNDED else int(hi)) for lo, hi in merged)


def _multi_sort_key(multi: Multiplicity) -> tuple:
    return tuple((lo, -1 if hi is UNBOUNDED else hi) for lo, hi in multi.ranges)


@dataclass(frozen=True, slots=True)
class AssociationEnd:
    """One end of an association: a role name, the classifier whose
    instances carry the role as a link attribute, and the permitted link
    counts."""

    end_name: str
    classifier: str
    multi: Multiplicity

    def __post_init__(self):
        _require_name(self.end_name, "end name")
        _require_name(self.classifier, "classifier name")


def _end_sort_key(end: AssociationEnd) -> tuple:
    return (end.end_name, end.classifier, _multi_sort_key(end.multi))


@dataclass(frozen=True, slots=True)
class Association:
    """A named association connecting association ends.

    The syntax admits any number of ends; non-binary associations are a
    well-formedness violation (WF6) rather than a construction error.
    Ends are stored sorted by name for canonical equality.
    """

    name: str
    ends: tuple[AssociationEnd, ...]

    def __init__(self, name: str, ends: Iterable[AssociationEnd]):
        object.__setattr__(self, "name", _require_name(name, "association name"))
        object.__setattr__(self, "ends", tuple(sorted(ends, key=_end_sort_key)))

    def end(self, end_name: str) -> Optional[AssociationEnd]:
        for e in self.ends:
            if e.end_name == end_name:
                return e
        return None


AttributeSpec = Union[
    Mapping[str, Iterable[str]],
    Iterable[tuple[str, Iterable[str]]],
]


@dataclass(frozen=True)
class StaticModel:
    """A class diagram: classifiers, abstract subset, associations,
    declared attributes and the generalization relation ``supertype_of``
    (pairs ``(super, sub)``).

    ``name`` is display metadata from the concrete syntax and is excluded
    from equality, so a transformed model can match a goal model that was
    written in a different file.
    """

    classifiers: tuple[str, ...] = ()
    abstract: tuple[str, ...] = ()
    associations: tuple[Association, ...] = ()
    attributes: tuple[tuple[str, tuple[str, ...]], ...] = ()
    supertype_of: tuple[tuple[str, str], ...] = ()
    name: str = field(default="M", compare=False)

    def __init__(
        self,
        classifiers: Iterable[str] = (),
        abstract: Iterable[str] = (),
        associations: Iterable[Association] = (),
        attributes: AttributeSpec = (),
        supertype_of: Iterable[tuple[str, str]] = (),
        name: str = "M",
    ):
        cset = tuple(sorted({_require_name(c, "classifier name") for c in classifiers}))
        aset = tuple(sorted({_require_name(a, "classifier name") for a in abstract}))
        assocs = tuple(
            sorted(associations, key=lambda a: (a.name, tuple(_end_sort_key(e) for e in a.ends)))
        )
        attr_items = attributes.items() if isinstance(attributes, Mapping) else attributes
        attr_map: dict[str, set[str]] = {c: set() for c in cset}
        for c, names in attr_items:
            if c not in attr_map:
                raise ValueError(f"attributes declared for unknown classifier {c!r}")
            attr_map[c].update(_require_name(n, "attribute name") for n in names)
        supers = set()
        for sup, sub in supertype_of:
            if sup not in attr_map or sub not in attr_map:
                raise ValueError(f"supertype_of pair ({sup!r}, {sub!r}) names an undeclared classifier")
            supers.add((sup, sub))
        object.__setattr__(self, "classifiers", cset)
        object.__setattr__(self, "abstract", aset)
        object.__setattr__(self, "associations", assocs)
        object.__setattr__(
            self, "attributes", tuple((c, tuple(sorted(attr_map[c]))) for c in cset)
        )
        object.__setattr__(self, "supertype_of", tuple(sorted(supers)))
        object.__setattr__(self, "name", _require_name(name, "model name"))

    def declared_attributes(self, classifier: str) -> tuple[str, ...]:
        for c, names in self.attributes:
            if c == classifier:
                return names
        raise UnknownClassifierError(f"unknown classifier {classifier!r}")

    def association(self, name: str) -> Optional[Association]:
        for a in self.associations:
            if a.name == name:
                return a
        return None

    def replace(self, **changes) -> "StaticModel":
        """Return a copy with the given fields substituted (re-canonicalized)."""
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs["attributes"] = dict(kwargs["attributes"])
        kwargs.update(changes)
        return StaticModel(**kwargs)


@dataclass(frozen=True, slots=True)
class WfViolation:
    rule: str  # WF1..WF8
    subject: str
    message: str


@dataclass(frozen=True, slots=True)
class WellFormednessReport:
    violations: tuple[WfViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def rule_ids(self) -> tuple[str, ...]:
        return tuple(sorted({v.rule for v in self.violations}))


class _ModelView:
    """Per-model derived data, computed once and shared by the semantic
    operations (see :func:`_view`)."""

    def __init__(self, model: StaticModel):
        self.model = model
        self.classifier_set = frozenset(model.classifiers)
        self.abstract_set = frozenset(model.abstract)
        self.concrete_set = self.classifier_set - self.abstract_set
        self.declared = {c: frozenset(names) for c, names in model.attributes}

        children: dict[str, set[str]] = {c: set() for c in model.classifiers}
        for sup, sub in model.supertype_of:
            children[sup].add(sub)
        self.descendants = {c: _reachable(c, children) for c in model.classifiers}
        self.ancestors: dict[str, set[str]] = {c: set() for c in model.classifiers}
        for c, descs in self.descendants.items():
            for d in descs:
                self.ancestors[d].add(c)
        self.closure = frozenset(
            (c, d) for c, descs in self.descendants.items() for d in descs
        )
        self.all_attrs = {
            c: frozenset().union(
                self.declared[c], *(self.declared[a] for a in self.ancestors[c])
            )
            for c in model.classifiers
        }
        self._report: Optional[WellFormednessReport] = None
        self._applicable_ends: Optional[dict[str, tuple["_EndInfo", ...]]] = None

    @property
    def report(self) -> WellFormednessReport:
        if self._report is None:
            self._report = _check_well_formed(self)
        return self._report

    @property
    def applicable_ends(self) -> dict[str, tuple["_EndInfo", ...]]:
        """For each classifier, the association ends its instances must
        carry (ends sitting on the classifier itself or an ancestor).
        Only meaningful for well-formed (hence binary) models."""
        if self._applicable_ends is None:
            table: dict[str, list[_EndInfo]] = {c: [] for c in self.model.classifiers}
            for assoc in self.model.associations:
                for i, e in enumerate(assoc.ends):
                    opposite = assoc.ends[1 - i]
                    info = _EndInfo(
                        assoc_name=assoc.name,
                        end_name=e.end_name,
                        multi=e.multi,
                        opposite_classifier=opposite.classifier,
                        opposite_instances=frozenset(
                            {opposite.classifier} | self.descendants.get(opposite.classifier, set())
                        ),
                    )
                    for c in {e.classifier} | self.descendants.get(e.classifier, set()):
                        table[c].append(info)
            self._applicable_ends = {
                c: tuple(sorted(infos, key=lambda i: (i.end_name, i.assoc_name)))
                for c, infos in table.items()
            }
        return self._applicable_ends


@dataclass(frozen=True, slots=True)
class _EndInfo:
    assoc_name: str
    end_name: str
    multi: Multiplicity
    opposite_classifier: str
    opposite_instances: frozenset


def _reachable(start: str, children: Mapping[str, set[str]]) -> set[str]:
    seen: set[str] = set()
    stack = list(children.get(start, ()))
    while stack:
        node = stack.pop()
        if node not in seen:
            seen.add(node)
            stack.extend(children.get(node, ()))
    return seen


@lru_cache(maxsize=None)
def _view(model: StaticModel) -> _ModelView:
    return _ModelView(model)


def supertype_closure(model: StaticModel) -> frozenset:
    """Transitive (not reflexive) closure of the generalization relation."""
    return _view(model).closure


def all_attributes(model: StaticModel, classifier: str) -> frozenset:
    """Declared attributes of ``classifier`` plus those of all ancestors."""
    view = _view(model)
    if classifier not in view.classifier_set:
        raise UnknownClassifierError(f"unknown classifier {classifier!r}")
    return view.all_attrs[classifier]


def instance_classifiers(model: StaticModel, classifier: str) -> frozenset:
    """The classifier together with all its descendants; instances of any
    of these count as instances of ``classifier``."""
    view = _view(model)
    if classifier not in view.classifier_set:
        raise UnknownClassifierError(f"unknown classifier {classifier!r}")
    return frozenset({classifier} | view.descendants[classifier])


def well_formed(model: StaticModel) -> WellFormednessReport:
    """Check rules WF1..WF8; violations are data, not failures."""
    return _view(model).report


def _check_well_formed(view: _ModelView) -> WellFormednessReport:
    model = view.model
    out: list[WfViolation] = []

    # WF1: abstract classifiers must be declared classifiers.
    for a in model.abstract:
        if a not in view.classifier_set:
            out.append(WfViolation("WF1", a, "abstract classifier is not a declared classifier"))

    # WF2: generalization must be acyclic.
    for c in model.classifiers:
        if (c, c) in view.closure:
            out.append(WfViolation("WF2", c, "generalization cycle passes through this classifier"))

    # WF3: along each supertype edge, inherited attribute sets must nest.
    # With the closure-based attribute reading this holds by construction;
    # asserted anyway so the contract is visible.
    for sup, sub in model.supertype_of:
        missing = view.all_attrs[sup] - view.all_attrs[sub]
        if missing:
            out.append(
                WfViolation(
                    "WF3",
                    f"{sup} -> {sub}",
                    f"subtype lacks inherited attributes: {', '.join(sorted(missing))}",
                )
            )

    # WF4: association names pairwise distinct.
    by_name: dict[str, int] = {}
    for assoc in model.associations:
        by_name[assoc.name] = by_name.get(assoc.name, 0) + 1
    for assoc_name in sorted(n for n, k in by_name.items() if k > 1):
        out.append(
            WfViolation("WF4", assoc_name, f"association name used {by_name[assoc_name]} times")
        )

    # WF5: every end references a declared classifier.
    for assoc in model.associations:
        for e in assoc.ends:
            if e.classifier not in view.classifier_set:
                out.append(
                    WfViolation(
                        "WF5",
                        f"{assoc.name}.{e.end_name}",
                        f"end references undeclared classifier {e.classifier}",
                    )
                )

    # WF6: associations are binary.
    for assoc in model.associations:
        if len(assoc.ends) != 2:
            out.append(
                WfViolation("WF6", assoc.name, f"has {len(assoc.ends)} ends; associations must have exactly 2")
            )

    # WF7: an end name must not collide with an attribute reachable at the
    # end's classifier or any of its descendants (links key on end names).
    for assoc in model.associations:
        for e in assoc.ends:
            if e.classifier not in view.classifier_set:
                continue
            for d in sorted({e.classifier} | view.descendants[e.classifier]):
                if e.end_name in view.all_attrs[d]:
                    out.append(
                        WfViolation(
                            "WF7",
                            f"{assoc.name}.{e.end_name}",
                            f"end name collides with attribute {e.end_name!r} reachable at {d}",
                        )
                    )

    # WF8: the ends of one association carry distinct names.
    for assoc in model.associations:
        seen: set[str] = set()
        dups: set[str] = set()
        for e in assoc.ends:
            if e.end_name in seen:
                dups.add(e.end_name)
            seen.add(e.end_name)
        for n in sorted(dups):
            out.append(WfViolation("WF8", assoc.name, f"end name {n!r} used by more than one end"))

    out.sort(key=lambda v: (v.rule, v.subject, v.message))
    return WellFormednessReport(tuple(out))

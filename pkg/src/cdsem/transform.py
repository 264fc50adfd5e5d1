"""Syntactic transformation rules, deduction/refinement checking and proof
replay.

A rule rewrites one static model into another.  A rule application is a
valid deduction step when every snapshot satisfying the premise model also
satisfies the transformed model; ``check_deduction`` decides that at finite
scope by enumerating the premise's satisfying snapshots and re-checking
each against the conclusion.  Refinement is the same inclusion read in the
opposite direction: the concrete model deduces the abstract one.

Verdicts are bounded: HOLDS_AT_SCOPE is evidence at the given scope, never
a proof for all scopes; FAILS comes with a concrete counterexample snapshot
and is conclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import (
    IllFormedModelError,
    KernelError,
    ProofStepError,
    ResultIllFormedError,
    SideConditionError,
    UnknownNameError,
)
from .semantics import (
    DEFAULT_GUARD_LIMIT,
    Mode,
    Scope,
    Snapshot,
    enumerate_models,
    satisfies,
)
from .syntax import (
    Association,
    AssociationEnd,
    Multiplicity,
    StaticModel,
    supertype_closure,
    well_formed,
)


class Rule:
    """Base class for syntactic transformation rules."""

    kind: str = "rule"


@dataclass(frozen=True, slots=True)
class AddClassifier(Rule):
    """Add a fresh classifier, optionally abstract, with declared
    attributes and existing supertypes."""

    name: str
    is_abstract: bool = False
    attrs: tuple[str, ...] = ()
    supers: tuple[str, ...] = ()
    kind = "add_classifier"


@dataclass(frozen=True, slots=True)
class EraseAssociation(Rule):
    assoc_name: str
    kind = "erase"


@dataclass(frozen=True, slots=True)
class RenameAssociation(Rule):
    old_name: str
    new_name: str
    kind = "rename"


@dataclass(frozen=True, slots=True)
class WidenMultiplicity(Rule):
    """Replace an end's multiplicity with a superset."""

    assoc_name: str
    end_name: str
    new_multi: Multiplicity
    kind = "widen"


@dataclass(frozen=True, slots=True)
class NarrowMultiplicity(Rule):
    """Replace an end's multiplicity with a subset.  A refinement rule:
    never sound as a deduction step."""

    assoc_name: str
    end_name: str
    new_multi: Multiplicity
    kind = "narrow"


@dataclass(frozen=True, slots=True)
class RestrictEndToSubtype(Rule):
    """Move an end down to a strict descendant of its current classifier."""

    assoc_name: str
    end_name: str
    sub_classifier: str
    kind = "restrict"


@dataclass(frozen=True, slots=True)
class EraseAttribute(Rule):
    classifier: str
    attr_name: str
    kind = "erase_attr"


@dataclass(frozen=True, slots=True)
class MakeConcrete(Rule):
    classifier: str
    kind = "make_concrete"


@dataclass(frozen=True, slots=True)
class IntroduceWeakenedAssociation(Rule):
    """Copy an association under a fresh name, keeping end names verbatim,
    optionally retargeting ends to strict subtypes and widening
    multiplicities.  End names must be preserved because satisfaction keys
    on them: the copy's clauses are then weakenings of the original's."""

    source_assoc: str
    fresh_name: str
    retargets: tuple[tuple[str, str], ...] = ()  # (end name, subtype)
    widenings: tuple[tuple[str, Multiplicity], ...] = ()
    kind = "introduce_weakened"


@dataclass(frozen=True, slots=True)
class ProofScript:
    steps: tuple[Rule, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("proof script must contain at least one step")


class Strategy(Enum):
    META = "meta"
    BOUNDED = "bounded"


class Justification(Enum):
    META_SOUND = "meta-sound"
    CHECKED_AT_SCOPE = "checked-at-scope"


@dataclass(frozen=True, slots=True)
class DeductionVerdict:
    holds: bool
    counterexample: Optional[Snapshot]
    scope: Scope
    mode: Mode

    @property
    def outcome(self) -> str:
        return "HOLDS_AT_SCOPE" if self.holds else "FAILS"


@dataclass(frozen=True, slots=True)
class ProofStep:
    index: int  # 1-based
    rule: Rule
    model: StaticModel  # model after applying the rule
    justification: Justification
    verdict: DeductionVerdict


@dataclass(frozen=True, slots=True)
class ProofResult:
    steps: tuple[ProofStep, ...]
    final_model: StaticModel
    goal_matched: bool
    holds: bool
    scope: Scope
    mode: Mode
    strategy: Strategy

    @property
    def outcome(self) -> str:
        return "HOLDS_AT_SCOPE" if self.holds else "FAILS"


def _require_assoc(model: StaticModel, name: str, rule_kind: str) -> Association:
    assoc = model.association(name)
    if assoc is None:
        raise UnknownNameError(f"{rule_kind}: association {name!r} not in model")
    return assoc


def _require_end(assoc: Association, end_name: str, rule_kind: str) -> AssociationEnd:
    end = assoc.end(end_name)
    if end is None:
        raise UnknownNameError(f"{rule_kind}: association {assoc.name!r} has no end {end_name!r}")
    return end


def _replace_end(assoc: Association, end_name: str, new_end: AssociationEnd) -> Association:
    ends = tuple(new_end if e.end_name == end_name else e for e in assoc.ends)
    return Association(assoc.name, ends)


def apply_rule(rule: Rule, model: StaticModel) -> StaticModel:
    """Apply one rule to a well-formed model, checking side conditions and
    requiring the result to be well-formed again."""
    report = well_formed(model)
    if not report.ok:
        raise IllFormedModelError(
            f"{rule.kind}: input model is not well-formed (violates {', '.join(report.rule_ids())})"
        )
    result = _dispatch(rule, model)
    result_report = well_formed(result)
    if not result_report.ok:
        first = result_report.violations[0]
        raise ResultIllFormedError(
            f"{rule.kind}: result violates {first.rule} on {first.subject}: {first.message}"
        )
    return result


def _dispatch(rule: Rule, model: StaticModel) -> StaticModel:
    if isinstance(rule, AddClassifier):
        for sup in rule.supers:
            if sup not in model.classifiers:
                raise UnknownNameError(f"{rule.kind}: supertype {sup!r} not in model")
        if rule.name in model.classifiers:
            raise SideConditionError(f"{rule.kind}: classifier {rule.name!r} already exists")
        attrs = dict(model.attributes)
        attrs[rule.name] = tuple(rule.attrs)
        return model.replace(
            classifiers=model.classifiers + (rule.name,),
            abstract=model.abstract + ((rule.name,) if rule.is_abstract else ()),
            attributes=attrs,
            supertype_of=model.supertype_of + tuple((s, rule.name) for s in rule.supers),
        )

    if isinstance(rule, EraseAssociation):
        _require_assoc(model, rule.assoc_name, rule.kind)
        return model.replace(
            associations=tuple(a for a in model.associations if a.name != rule.assoc_name)
        )

    if isinstance(rule, RenameAssociation):
        assoc = _require_assoc(model, rule.old_name, rule.kind)
        if model.association(rule.new_name) is not None:
            raise SideConditionError(f"{rule.kind}: association name {rule.new_name!r} already in use")
        renamed = Association(rule.new_name, assoc.ends)
        return model.replace(
            associations=tuple(renamed if a.name == rule.old_name else a for a in model.associations)
        )

    if isinstance(rule, WidenMultiplicity):
        assoc = _require_assoc(model, rule.assoc_name, rule.kind)
        end = _require_end(assoc, rule.end_name, rule.kind)
        if not rule.new_multi.covers(end.multi):
            raise SideConditionError(
                f"{rule.kind}: {rule.new_multi.text()} does not cover {end.multi.text()} "
                f"on {assoc.name}.{end.end_name}"
            )
        new_end = AssociationEnd(end.end_name, end.classifier, rule.new_multi)
        return _swap_assoc(model, _replace_end(assoc, rule.end_name, new_end))

    if isinstance(rule, NarrowMultiplicity):
        assoc = _require_assoc(model, rule.assoc_name, rule.kind)
        end = _require_end(assoc, rule.end_name, rule.kind)
        if not end.multi.covers(rule.new_multi):
            raise SideConditionError(
                f"{rule.kind}: {rule.new_multi.text()} is not a subset of {end.multi.text()} "
                f"on {assoc.name}.{end.end_name}"
            )
        new_end = AssociationEnd(end.end_name, end.classifier, rule.new_multi)
        return _swap_assoc(model, _replace_end(assoc, rule.end_name, new_end))

    if isinstance(rule, RestrictEndToSubtype):
        assoc = _require_assoc(model, rule.assoc_name, rule.kind)
        end = _require_end(assoc, rule.end_name, rule.kind)
        if rule.sub_classifier not in model.classifiers:
            raise UnknownNameError(f"{rule.kind}: classifier {rule.sub_classifier!r} not in model")
        if (end.classifier, rule.sub_classifier) not in supertype_closure(model):
            raise SideConditionError(
                f"{rule.kind}: {rule.sub_classifier} is not a strict descendant of {end.classifier} "
                f"on {assoc.name}.{end.end_name}"
            )
        new_end = AssociationEnd(end.end_name, rule.sub_classifier, end.multi)
        return _swap_assoc(model, _replace_end(assoc, rule.end_name, new_end))

    if isinstance(rule, EraseAttribute):
        if rule.classifier not in model.classifiers:
            raise UnknownNameError(f"{rule.kind}: classifier {rule.classifier!r} not in model")
        declared = model.declared_attributes(rule.classifier)
        if rule.attr_name not in declared:
            raise UnknownNameError(
                f"{rule.kind}: {rule.classifier} declares no attribute {rule.attr_name!r}"
            )
        attrs = dict(model.attributes)
        attrs[rule.classifier] = tuple(n for n in declared if n != rule.attr_name)
        return model.replace(attributes=attrs)

    if isinstance(rule, MakeConcrete):
        if rule.classifier not in model.classifiers:
            raise UnknownNameError(f"{rule.kind}: classifier {rule.classifier!r} not in model")
        if rule.classifier not in model.abstract:
            raise SideConditionError(f"{rule.kind}: classifier {rule.classifier!r} is not abstract")
        return model.replace(abstract=tuple(a for a in model.abstract if a != rule.classifier))

    if isinstance(rule, IntroduceWeakenedAssociation):
        assoc = _require_assoc(model, rule.source_assoc, rule.kind)
        if model.association(rule.fresh_name) is not None:
            raise SideConditionError(f"{rule.kind}: association name {rule.fresh_name!r} already in use")
        closure = supertype_closure(model)
        ends = list(assoc.ends)
        for end_name, sub in rule.retargets:
            end = _require_end(assoc, end_name, rule.kind)
            if sub not in model.classifiers:
                raise UnknownNameError(f"{rule.kind}: classifier {sub!r} not in model")
            if (end.classifier, sub) not in closure:
                raise SideConditionError(
                    f"{rule.kind}: {sub} is not a strict descendant of {end.classifier} "
                    f"on {assoc.name}.{end_name}"
                )
            ends = [
                AssociationEnd(e.end_name, sub, e.multi) if e.end_name == end_name else e
                for e in ends
            ]
        for end_name, new_multi in rule.widenings:
            end = _require_end(assoc, end_name, rule.kind)
            if not new_multi.covers(end.multi):
                raise SideConditionError(
                    f"{rule.kind}: {new_multi.text()} does not cover {end.multi.text()} "
                    f"on {assoc.name}.{end_name}"
                )
            ends = [
                AssociationEnd(e.end_name, e.classifier, new_multi) if e.end_name == end_name else e
                for e in ends
            ]
        weakened = Association(rule.fresh_name, tuple(ends))
        return model.replace(associations=model.associations + (weakened,))

    raise UnknownNameError(f"unsupported rule kind {type(rule).__name__}")


def _swap_assoc(model: StaticModel, new_assoc: Association) -> StaticModel:
    return model.replace(
        associations=tuple(new_assoc if a.name == new_assoc.name else a for a in model.associations)
    )


def meta_sound(rule: Rule, mode: Mode) -> bool:
    """Whether a rule kind is a deduction step by construction, so proof
    replay may skip the bounded check.

    Narrowing is a refinement rule and never meta-sound.  Rules that move
    an end to a subtype (restriction, and weakened introduction with
    retargets) are meta-sound only in strict-paper mode: with typed link
    targets they tighten the opposite end's typing clause.
    """
    if isinstance(rule, NarrowMultiplicity):
        return False
    if isinstance(rule, RestrictEndToSubtype):
        return mode is Mode.STRICT_PAPER
    if isinstance(rule, IntroduceWeakenedAssociation):
        return mode is Mode.STRICT_PAPER or not rule.retargets
    return isinstance(
        rule,
        (
            AddClassifier,
            EraseAssociation,
            EraseAttribute,
            RenameAssociation,
            WidenMultiplicity,
            MakeConcrete,
        ),
    )


def check_deduction(
    premise: StaticModel,
    conclusion: StaticModel,
    scope: Scope,
    mode: Mode = Mode.STRICT_PAPER,
    *,
    workers: int = 1,
    max_candidates: Optional[int] = DEFAULT_GUARD_LIMIT,
) -> DeductionVerdict:
    """Decide at scope whether every snapshot satisfying the premise also
    satisfies the conclusion.

    On failure the canonically first counterexample is returned; it
    satisfies the premise and violates the conclusion by construction.
    """
    for model, what in ((premise, "premise model"), (conclusion, "conclusion model")):
        report = well_formed(model)
        if not report.ok:
            raise IllFormedModelError(
                f"{what} is not well-formed (violates {', '.join(report.rule_ids())})"
            )
    for snapshot in enumerate_models(premise, scope, mode, workers=workers, max_candidates=max_candidates):
        if not satisfies(conclusion, snapshot, mode).satisfied:
            return DeductionVerdict(False, snapshot, scope, mode)
    return DeductionVerdict(True, None, scope, mode)


def check_refinement(
    concrete: StaticModel,
    abstract: StaticModel,
    scope: Scope,
    mode: Mode = Mode.STRICT_PAPER,
    *,
    workers: int = 1,
    max_candidates: Optional[int] = DEFAULT_GUARD_LIMIT,
) -> DeductionVerdict:
    """The concrete model refines the abstract one iff the abstract model
    can be deduced from it: deduction read in the opposite direction."""
    return check_deduction(
        concrete, abstract, scope, mode, workers=workers, max_candidates=max_candidates
    )


def verify_rule_soundness(
    rule: Rule,
    model: StaticModel,
    scope: Scope,
    mode: Mode = Mode.STRICT_PAPER,
    *,
    workers: int = 1,
    max_candidates: Optional[int] = DEFAULT_GUARD_LIMIT,
) -> DeductionVerdict:
    """Bounded check of the correctness condition for one rule at one
    model: the transformed model must be deducible from the original."""
    transformed = apply_rule(rule, model)
    return check_deduction(
        model, transformed, scope, mode, workers=workers, max_candidates=max_candidates
    )


def run_proof(
    script: ProofScript,
    start: StaticModel,
    goal: StaticModel,
    scope: Scope,
    mode: Mode = Mode.STRICT_PAPER,
    strategy: Strategy = Strategy.META,
    *,
    workers: int = 1,
    max_candidates: Optional[int] = DEFAULT_GUARD_LIMIT,
) -> ProofResult:
    """Replay a proof script left to right.

    Under the META strategy, rule kinds that are deduction-sound by
    construction are accepted without enumeration; everything else (and
    every step under BOUNDED) is checked semantically at scope.  The proof
    holds iff every step holds and the final model equals the goal up to
    canonical form.
    """
    report = well_formed(start)
    if not report.ok:
        raise IllFormedModelError(
            f"start model is not well-formed (violates {', '.join(report.rule_ids())})"
        )
    steps: list[ProofStep] = []
    current = start
    for i, rule in enumerate(script.steps, start=1):
        try:
            transformed = apply_rule(rule, current)
        except KernelError as exc:
            raise ProofStepError(i, exc) from exc
        if strategy is Strategy.META and meta_sound(rule, mode):
            justification = Justification.META_SOUND
            verdict = DeductionVerdict(True, None, scope, mode)
        else:
            justification = Justification.CHECKED_AT_SCOPE
            verdict = check_deduction(
                current, transformed, scope, mode, workers=workers, max_candidates=max_candidates
            )
        steps.append(ProofStep(i, rule, transformed, justification, verdict))
        current = transformed
    goal_matched = current == goal
    holds = goal_matched and all(s.verdict.holds for s in steps)
    return ProofResult(tuple(steps), current, goal_matched, holds, scope, mode, strategy)

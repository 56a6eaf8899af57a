"""Slot grid math, session assembly, lost timeslots, and peer validation."""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import (
    BeforeAnchor,
    EmptySession,
    MixedUsers,
    NoEligibleValidator,
    NotLost,
    ScoreOutOfRange,
    SelfReview,
)
from .model import (
    MessageKind,
    Session,
    SessionOrigin,
    Shout,
    Source,
    Tag,
    TagForm,
    TagScope,
    User,
    ValidationReview,
)

DEFAULT_SLOT = 900
DEFAULT_TOLERANCE = 300
DEFAULT_GAP = 1800
IDEAL_SHOUT_COUNT = 8
IDEAL_MAX_SPAN = 7200

LOST_TIMESLOT_TEXT = "lost timeslot"


@dataclass(frozen=True)
class SlotGrid:
    """A session's timing grid: anchor, slot length, and tolerance.

    Tolerance below half a slot keeps slot assignment unambiguous.
    """

    anchor: int
    slot: int = DEFAULT_SLOT
    tolerance: int = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if self.slot <= 0:
            raise ValueError("slot duration must be positive")
        if not 0 <= self.tolerance < self.slot / 2:
            raise ValueError("tolerance must satisfy 0 <= tolerance < slot/2")


@dataclass(frozen=True)
class SlotReading:
    shout_id: str
    index: int
    offset: int
    within_tolerance: bool


@dataclass(frozen=True)
class ConformanceReport:
    """How a session's shouts sit on its slot grid."""

    per_shout: tuple[SlotReading, ...]
    lost_slots: tuple[int, ...]
    ideal: bool

    def to_dict(self) -> dict:
        return {
            "per_shout": [
                [r.shout_id, r.index, r.offset, r.within_tolerance]
                for r in self.per_shout
            ],
            "lost_slots": list(self.lost_slots),
            "ideal": self.ideal,
        }


EMPTY_REPORT = ConformanceReport(per_shout=(), lost_slots=(), ideal=False)


def assign_slot(grid: SlotGrid, t: int) -> tuple[int, int, bool]:
    """Nearest grid slot for a timestamp: (index, signed offset, in tolerance)."""
    delta = t - grid.anchor
    if delta < -grid.tolerance:
        raise BeforeAnchor(f"timestamp {t} precedes grid anchor {grid.anchor}")
    index = (2 * delta + grid.slot) // (2 * grid.slot)
    offset = delta - index * grid.slot
    return index, offset, abs(offset) <= grid.tolerance


def conformance(session: Session, shouts: Sequence[Shout],
                tolerance: int = DEFAULT_TOLERANCE) -> ConformanceReport:
    """Grade a session's member shouts against its slot grid.

    Machine-generated lost-timeslot markers are not graded; a slot they sit
    on stays lost, and their presence rules out an ideal session.
    """
    content = [s for s in shouts if s.kind is not MessageKind.LOST_TIMESLOT]
    if not content:
        raise EmptySession(f"session {session.id} has no shouts to grade")
    grid = SlotGrid(session.start, session.slot_duration, tolerance)
    readings = []
    assigned = set()
    for shout in content:
        index, offset, within = assign_slot(grid, shout.created)
        readings.append(SlotReading(shout.id, index, offset, within))
        assigned.add(index)
    last_whole_slot = (session.end - session.start) // session.slot_duration
    lost = tuple(i for i in range(last_whole_slot + 1) if i not in assigned)
    has_markers = len(content) != len(shouts)
    ideal = (
        not lost
        and not has_markers
        and all(r.within_tolerance for r in readings)
        and len(content) == IDEAL_SHOUT_COUNT
        and session.end - session.start <= IDEAL_MAX_SPAN
    )
    return ConformanceReport(tuple(readings), lost, ideal)


def emit_lost_timeslot(session: Session, shouts: Sequence[Shout], slot_index: int,
                       tolerance: int = DEFAULT_TOLERANCE,
                       shout_id: str | None = None) -> Shout:
    """Machine-generated marker for a slot that received no shout.

    Rejected when the slot has an assigned shout, and rejected as a
    duplicate when a marker for the same slot already exists.
    """
    for existing in shouts:
        if existing.kind is MessageKind.LOST_TIMESLOT:
            marker_index = (existing.created - session.start) // session.slot_duration
            if marker_index == slot_index:
                raise NotLost(f"slot {slot_index} already marked lost")
    report = conformance(session, shouts, tolerance=tolerance)
    if slot_index not in report.lost_slots:
        raise NotLost(f"slot {slot_index} of session {session.id} is not lost")
    return Shout(
        id=shout_id or uuid.uuid4().hex,
        nick=session.user,
        message=LOST_TIMESLOT_TEXT,
        created=session.start + slot_index * session.slot_duration,
        source=Source.HTTP,
        kind=MessageKind.LOST_TIMESLOT,
        session_ref=session.id,
    )


def infer_sessions(shouts: Sequence[Shout], gap_threshold: int = DEFAULT_GAP,
                   slot_duration: int = DEFAULT_SLOT) -> list[Session]:
    """Greedy single-pass grouping of one user's time-ordered shouts.

    A gap strictly greater than the threshold starts a new session, so the
    result is a partition of the input.
    """
    if not shouts:
        return []
    nicks = {s.nick for s in shouts}
    if len(nicks) > 1:
        raise MixedUsers(f"shouts span users {sorted(nicks)}")
    user = shouts[0].nick
    runs: list[list[Shout]] = [[shouts[0]]]
    for prev, cur in zip(shouts, shouts[1:]):
        if cur.created - prev.created > gap_threshold:
            runs.append([cur])
        else:
            runs[-1].append(cur)
    sessions = []
    for i, run in enumerate(runs):
        sessions.append(Session(
            id=f"{user}-inferred-{i}",
            user=user,
            origin=SessionOrigin.INFERRED,
            start=run[0].created,
            end=run[-1].created,
            slot_duration=slot_duration,
            shouts=tuple(s.id for s in run),
        ))
    return sessions


def assign_validator(session: Session, users: Iterable[User], seed: int) -> User:
    """Seeded uniform pick of a reviewer among everyone but the owner."""
    eligible = sorted(
        (u for u in users if u.id != session.user and session.user not in u.nicks),
        key=lambda u: u.id,
    )
    if not eligible:
        raise NoEligibleValidator(f"no peer available for session {session.id}")
    return random.Random(seed).choice(eligible)


def make_review(session: Session, reviewer: str, score: float,
                comment: str | None, created: int) -> ValidationReview:
    """Validated peer review; owners cannot review their own sessions."""
    if reviewer == session.user:
        raise SelfReview(f"{reviewer} owns session {session.id}")
    if not 0 <= score <= 1:
        raise ScoreOutOfRange(f"score {score} outside [0, 1]")
    return ValidationReview(session=session.id, reviewer=reviewer, score=score,
                            comment=comment, created=created)


def apply_session_tags(shouts: Sequence[Shout], tags: Sequence[Tag] = ()) -> list[Shout]:
    """Propagate session-wide and until-next-tag tags over member shouts.

    Session-scoped tags attach to every shout. An until-next-tag tag stays
    active from its carrying shout (or the session start, for tags passed
    in directly) until the next shout that carries its own word tag.
    """
    session_wide = [t for t in tags if t.scope is TagScope.SESSION]
    active = [t for t in tags if t.scope is TagScope.UNTIL_NEXT_TAG]
    tagged = []
    for shout in shouts:
        own_words = [t for t in shout.tags if t.form is TagForm.WORD]
        if own_words:
            active = own_words
        extra = [t for t in active + session_wide if t not in shout.tags]
        if extra:
            shout = replace(shout, tags=shout.tags + tuple(extra))
        tagged.append(shout)
    return tagged

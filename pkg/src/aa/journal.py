"""Append-only JSON-lines journal: one record per line, replayable.

Records are never mutated in place; corrections append superseding records.
Sequence numbers strictly increase with no gaps within one file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterator

from .errors import JournalError
from .model import (
    DeviationKind,
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

SHOUT = "shout"
SESSION = "session"
REVIEW = "review"

EVENT_OPEN = "open"
EVENT_CLOSE = "close"
EVENT_SCREENCAST = "screencast"


@dataclass(frozen=True)
class JournalRecord:
    seq: int
    written: int
    type: str
    data: dict


def shout_to_dict(shout: Shout) -> dict:
    return {
        "id": shout.id,
        "nick": shout.nick,
        "message": shout.message,
        "created": shout.created,
        "source": shout.source.value,
        "kind": shout.kind.value,
        "tags": [{"form": t.form.value, "name": t.name, "scope": t.scope.value}
                 for t in shout.tags],
        "session": shout.session_ref,
        "deviation": shout.deviation.value if shout.deviation else None,
        "client_created": shout.client_created,
        "topic": shout.topic,
    }


def shout_from_dict(data: dict) -> Shout:
    return Shout(
        id=data["id"],
        nick=data["nick"],
        message=data["message"],
        created=data["created"],
        source=Source(data.get("source", "http")),
        kind=MessageKind(data.get("kind", "shout")),
        tags=tuple(Tag(TagForm(t["form"]), t["name"], TagScope(t["scope"]))
                   for t in data.get("tags", ())),
        session_ref=data.get("session"),
        deviation=DeviationKind(data["deviation"]) if data.get("deviation") else None,
        client_created=data.get("client_created"),
        topic=data.get("topic"),
    )


def session_to_dict(session: Session, event: str, *,
                    report: dict | None = None, validator: str | None = None) -> dict:
    return {
        "event": event,
        "id": session.id,
        "user": session.user,
        "origin": session.origin.value,
        "start": session.start,
        "end": session.end,
        "slot": session.slot_duration,
        "shouts": list(session.shouts),
        "screencast": session.screencast,
        "report": report,
        "validator": validator,
    }


def session_from_dict(data: dict) -> Session:
    return Session(
        id=data["id"],
        user=data["user"],
        origin=SessionOrigin(data.get("origin", "explicit")),
        start=data["start"],
        end=data["end"],
        slot_duration=data.get("slot", 900),
        shouts=tuple(data.get("shouts", ())),
        screencast=data.get("screencast"),
    )


def review_to_dict(review: ValidationReview) -> dict:
    return {
        "session": review.session,
        "reviewer": review.reviewer,
        "score": review.score,
        "comment": review.comment,
        "created": review.created,
    }


def review_from_dict(data: dict) -> ValidationReview:
    return ValidationReview(
        session=data["session"],
        reviewer=data["reviewer"],
        score=data["score"],
        comment=data.get("comment"),
        created=data["created"],
    )


class Journal:
    """Writer for one journal file; appends are flushed before returning."""

    def __init__(self, path: str, next_seq: int = 1):
        self.path = path
        self.next_seq = next_seq
        self._fh = None

    def _handle(self):
        if self._fh is None:
            try:
                self._fh = open(self.path, "a", encoding="utf-8")
            except OSError as exc:
                raise JournalError(f"cannot open journal {self.path}: {exc}") from exc
        return self._fh

    def append_many(self, items: list[tuple[str, dict]], written: int) -> list[JournalRecord]:
        """Append several records in one write; nothing advances on failure."""
        records = [
            JournalRecord(seq=self.next_seq + i, written=written, type=rtype, data=data)
            for i, (rtype, data) in enumerate(items)
        ]
        payload = "".join(
            json.dumps({"seq": r.seq, "written": r.written, "type": r.type,
                        "data": r.data}, sort_keys=True) + "\n"
            for r in records
        )
        try:
            fh = self._handle()
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        except OSError as exc:
            raise JournalError(f"journal write failed: {exc}") from exc
        self.next_seq += len(records)
        return records

    def append(self, rtype: str, data: dict, written: int) -> JournalRecord:
        return self.append_many([(rtype, data)], written)[0]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_records(path: str) -> Iterator[JournalRecord]:
    """Yield journal records in order; a torn final line is tolerated."""
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            record = JournalRecord(seq=raw["seq"], written=raw["written"],
                                   type=raw["type"], data=raw["data"])
        except json.JSONDecodeError as exc:
            if lineno == len(lines) - 1 and not line.endswith("\n"):
                return
            raise JournalError(f"{path}:{lineno + 1}: malformed record") from exc
        except (KeyError, TypeError) as exc:
            raise JournalError(f"{path}:{lineno + 1}: incomplete record") from exc
        yield record


@dataclass
class ReplayState:
    """State rebuilt from a journal file, in record order."""

    shouts: list[Shout] = field(default_factory=list)
    shouts_by_id: dict[str, Shout] = field(default_factory=dict)
    sessions: dict[str, Session] = field(default_factory=dict)
    open_sessions: dict[str, str] = field(default_factory=dict)
    reports: dict[str, dict] = field(default_factory=dict)
    validators: dict[str, str] = field(default_factory=dict)
    reviews: dict[str, ValidationReview] = field(default_factory=dict)
    members: dict[str, list[str]] = field(default_factory=dict)
    last_seq: int = 0
    last_created: int = 0

    def users(self) -> dict[str, User]:
        """Users derived from distinct nicks, keyed and identified by nick."""
        return {s.nick: User(id=s.nick, nicks=frozenset({s.nick}))
                for s in self.shouts}

    def apply(self, record: JournalRecord) -> None:
        self.last_seq = record.seq
        if record.type == SHOUT:
            shout = shout_from_dict(record.data)
            self.shouts.append(shout)
            self.shouts_by_id[shout.id] = shout
            self.last_created = max(self.last_created, shout.created)
            if shout.session_ref and shout.kind in (MessageKind.SHOUT,
                                                    MessageKind.LOST_TIMESLOT):
                self.members.setdefault(shout.session_ref, []).append(shout.id)
        elif record.type == SESSION:
            session = session_from_dict(record.data)
            event = record.data.get("event", EVENT_CLOSE)
            if event == EVENT_OPEN:
                # a (re)opened session starts with a clean member list
                self.members[session.id] = []
                self.open_sessions[session.user] = session.id
            elif event == EVENT_CLOSE:
                if self.open_sessions.get(session.user) == session.id:
                    del self.open_sessions[session.user]
                if record.data.get("report") is not None:
                    self.reports[session.id] = record.data["report"]
                if record.data.get("validator"):
                    self.validators[session.id] = record.data["validator"]
            self.sessions[session.id] = session
        elif record.type == REVIEW:
            review = review_from_dict(record.data)
            self.reviews[review.session] = review
        else:
            raise JournalError(f"unknown record type {record.type!r}")

    def session_with_members(self, session_id: str) -> Session:
        """The stored session with its replayed member list attached."""
        session = self.sessions[session_id]
        member_ids = tuple(self.members.get(session_id, ()))
        if session.shouts != member_ids:
            session = Session(
                id=session.id, user=session.user, origin=session.origin,
                start=session.start, end=session.end,
                slot_duration=session.slot_duration, shouts=member_ids,
                screencast=session.screencast,
            )
        return session


def replay(path: str) -> ReplayState:
    """Rebuild state by applying every record of a journal in order."""
    state = ReplayState()
    for record in read_records(path):
        state.apply(record)
    return state

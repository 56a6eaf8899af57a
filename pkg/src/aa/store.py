"""The shout store: arrival stamping, journaling, sessions, and listings.

State is held in memory and every accepted mutation is journaled before it
becomes visible, so replaying the journal reproduces the live state.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import replace
from typing import Callable, Sequence
from urllib.parse import urlsplit

from . import journal as jn
from . import parsing, sessions as eng
from .errors import (
    BadFilter,
    BadUrl,
    EmptyMessage,
    EmptySession,
    NoEligibleValidator,
    NoOpenSession,
    UnknownSession,
)
from .model import (
    MessageKind,
    Session,
    SessionOrigin,
    Shout,
    Source,
    User,
    ValidationReview,
    iso8601,
    normalize_nick,
    parse_iso8601,
)

def render_text_line(created_iso: str, nick: str, message: str) -> str:
    return f"{created_iso}\t{nick}\t{message}"


def shout_listing_entry(shout: Shout) -> dict:
    """Listing shape for one shout; tags rendered in their surface form."""
    return {
        "id": shout.id,
        "nick": shout.nick,
        "message": shout.message,
        "created": iso8601(shout.created),
        "kind": shout.kind.value,
        "tags": [t.surface for t in shout.tags],
        "source": shout.source.value,
    }


def _normalize_message(message: str) -> str:
    """Collapse all whitespace runs to single spaces; listings are line-oriented."""
    return " ".join(message.split())


class Store:
    """Journal-backed state with serialized mutations."""

    def __init__(self, journal_path: str, *,
                 clock: Callable[[], float] = time.time,
                 slot: int = eng.DEFAULT_SLOT,
                 tolerance: int = eng.DEFAULT_TOLERANCE,
                 gap: int = eng.DEFAULT_GAP,
                 parser_config: parsing.ParserConfig = parsing.DEFAULT_CONFIG):
        self._lock = threading.RLock()
        self._clock = clock
        self.slot = slot
        self.tolerance = tolerance
        self.gap = gap
        self.parser_config = parser_config
        self.state = jn.replay(journal_path)
        self.journal = jn.Journal(journal_path, next_seq=self.state.last_seq + 1)

    # -- time ------------------------------------------------------------

    def _now(self) -> int:
        return int(self._clock())

    def _arrival(self) -> int:
        # arrival times never go backwards within one process
        return max(self._now(), self.state.last_created)

    # -- ingest ----------------------------------------------------------

    def _build_shout(self, nick: str, message: str, *, source: Source,
                     created: int, client_created: int | None = None,
                     session_ref: str | None = None) -> Shout:
        handle = normalize_nick(nick)
        text = _normalize_message(message)
        if not text:
            raise EmptyMessage("blank message")
        parsed = parsing.parse(text, self.parser_config)
        deviation = parsing.flag_deviation(parsed, self.parser_config)
        return Shout(
            id=uuid.uuid4().hex,
            nick=handle,
            message=text,
            created=created,
            source=source,
            kind=parsed.kind,
            tags=parsed.tags,
            session_ref=session_ref,
            deviation=deviation,
            client_created=client_created,
            topic=parsed.topic,
        )

    def receive_shout(self, nick: str, message: str, *,
                      source: Source = Source.HTTP,
                      client_created: int | None = None) -> Shout:
        """Stamp, parse, journal, and store one message as a shout record."""
        with self._lock:
            created = self._arrival()
            handle = normalize_nick(nick)
            session_ref = self.state.open_sessions.get(handle)
            shout = self._build_shout(nick, message, source=source, created=created,
                                      client_created=client_created,
                                      session_ref=session_ref)
            record = self.journal.append(jn.SHOUT, jn.shout_to_dict(shout),
                                         written=self._now())
            self.state.apply(record)
            return shout

    # -- sessions ----------------------------------------------------------

    def _session(self, session_id: str) -> Session:
        session = self.state.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        return session

    def _member_shouts(self, session_id: str) -> list[Shout]:
        ids = self.state.members.get(session_id, ())
        return [self.state.shouts_by_id[i] for i in ids]

    def _open_session(self, handle: str, now: int) -> tuple[Session, str]:
        existing = self.state.open_sessions.get(handle)
        session = Session(
            id=existing or uuid.uuid4().hex,
            user=handle,
            origin=SessionOrigin.EXPLICIT,
            start=now,
            end=now,
            slot_duration=self.slot,
        )
        event = "reanchored" if existing else "opened"
        return session, event

    def _close_session(self, handle: str,
                       now: int) -> tuple[Session, dict, str | None, list[Shout]]:
        session_id = self.state.open_sessions.get(handle)
        if session_id is None:
            raise NoOpenSession(f"{handle} has no open session")
        session = replace(self.state.sessions[session_id], end=now)
        members = self._member_shouts(session_id)
        try:
            report = eng.conformance(session, members, tolerance=self.tolerance)
        except EmptySession:
            report = eng.EMPTY_REPORT
        markers = []
        for index in report.lost_slots:
            already = any(
                s.kind is MessageKind.LOST_TIMESLOT
                and (s.created - session.start) // session.slot_duration == index
                for s in members
            )
            if not already:
                markers.append(eng.emit_lost_timeslot(session, members, index,
                                                      tolerance=self.tolerance))
        validator = None
        try:
            validator = eng.assign_validator(session, self.users().values(),
                                             seed=self.journal.next_seq).id
        except NoEligibleValidator:
            pass
        return session, report.to_dict(), validator, markers

    def receive_message(self, nick: str, message: str,
                        batch: Sequence[dict] | None = None) -> dict:
        """Dispatch one message: start, stop, push, query, or plain shout."""
        with self._lock:
            handle = normalize_nick(nick)
            text = _normalize_message(message)
            if not text:
                raise EmptyMessage("blank message")
            kind = parsing.classify_kind(text)
            now = self._arrival()
            written = self._now()

            if kind is MessageKind.START:
                session, event = self._open_session(handle, now)
                control = self._build_shout(handle, text, source=Source.HTTP,
                                            created=now, session_ref=session.id)
                records = [
                    (jn.SHOUT, jn.shout_to_dict(control)),
                    (jn.SESSION, jn.session_to_dict(session, jn.EVENT_OPEN)),
                ]
                appended = self.journal.append_many(records, written)
                for rec in appended:
                    self.state.apply(rec)
                return {"result": "start", "session": session.id, "event": event}

            if kind is MessageKind.STOP:
                session, report, validator, markers = self._close_session(handle, now)
                members = tuple(self.state.members.get(session.id, ()))
                session = replace(session,
                                  shouts=members + tuple(m.id for m in markers))
                control = self._build_shout(handle, text, source=Source.HTTP,
                                            created=now, session_ref=session.id)
                records = [(jn.SHOUT, jn.shout_to_dict(control))]
                records += [(jn.SHOUT, jn.shout_to_dict(m)) for m in markers]
                records.append((jn.SESSION, jn.session_to_dict(
                    session, jn.EVENT_CLOSE, report=report, validator=validator)))
                appended = self.journal.append_many(records, written)
                for rec in appended:
                    self.state.apply(rec)
                return {"result": "stop", "session": session.id,
                        "report": report, "validator": validator}

            if kind is MessageKind.PUSH:
                session_ref = self.state.open_sessions.get(handle)
                flushed = []
                for item in batch or ():
                    client_created = item.get("client_created")
                    if isinstance(client_created, str):
                        client_created = parse_iso8601(client_created)
                    flushed.append(self._build_shout(
                        handle, item["message"], source=Source.HTTP, created=now,
                        client_created=client_created, session_ref=session_ref))
                control = self._build_shout(handle, text, source=Source.HTTP,
                                            created=now, session_ref=session_ref)
                records = [(jn.SHOUT, jn.shout_to_dict(s)) for s in flushed]
                records.append((jn.SHOUT, jn.shout_to_dict(control)))
                appended = self.journal.append_many(records, written)
                for rec in appended:
                    self.state.apply(rec)
                return {"result": "push", "accepted": len(flushed),
                        "ids": [s.id for s in flushed]}

            if kind is MessageKind.QUERY:
                control = self._build_shout(handle, text, source=Source.HTTP,
                                            created=now,
                                            session_ref=self.state.open_sessions.get(handle))
                record = self.journal.append(jn.SHOUT, jn.shout_to_dict(control), written)
                self.state.apply(record)
                return {"result": "query", "topic": control.topic, "items": [],
                        "code": "no_backend"}

            shout = self.receive_shout(handle, text)
            return {"result": "shout", "id": shout.id}

    def emit_lost(self, session_id: str, slot_index: int) -> Shout:
        """Mark one past slot of a session as lost; duplicates are rejected."""
        with self._lock:
            session = self._session(session_id)
            if session_id in self.state.open_sessions.values():
                session = replace(session, end=max(session.start, self._arrival()))
            marker = eng.emit_lost_timeslot(session, self._member_shouts(session_id),
                                            slot_index, tolerance=self.tolerance)
            record = self.journal.append(jn.SHOUT, jn.shout_to_dict(marker),
                                         written=self._now())
            self.state.apply(record)
            return marker

    def attach_screencast(self, session_id: str, url: str) -> Session:
        """Record (or replace) a session's screencast reference."""
        with self._lock:
            session = self._session(session_id)
            parts = urlsplit(url)
            if parts.scheme not in ("http", "https") or not parts.netloc:
                raise BadUrl(f"not an http(s) url: {url!r}")
            updated = replace(session, screencast=url,
                              shouts=tuple(self.state.members.get(session_id, ())))
            record = self.journal.append(
                jn.SESSION, jn.session_to_dict(updated, jn.EVENT_SCREENCAST),
                written=self._now())
            self.state.apply(record)
            return updated

    def record_review(self, session_id: str, reviewer: str, score: float,
                      comment: str | None = None) -> ValidationReview:
        """Attach a peer review; a second review replaces the first."""
        with self._lock:
            session = self._session(session_id)
            review = eng.make_review(session, normalize_nick(reviewer), score,
                                     comment, created=self._arrival())
            record = self.journal.append(jn.REVIEW, jn.review_to_dict(review),
                                         written=self._now())
            self.state.apply(record)
            return review

    # -- queries -----------------------------------------------------------

    def users(self) -> dict[str, User]:
        return self.state.users()

    def list_shouts(self, nick: str | None = None, since: str | None = None,
                    until: str | None = None) -> list[Shout]:
        """Shouts ordered by creation time (arrival order breaks ties)."""
        try:
            lo = parse_iso8601(since) if since else None
            hi = parse_iso8601(until) if until else None
        except ValueError as exc:
            raise BadFilter(f"bad time range: {exc}") from exc
        handle = normalize_nick(nick) if nick else None
        with self._lock:
            result = sorted(self.state.shouts, key=lambda s: s.created)
        if handle:
            result = [s for s in result if s.nick == handle]
        if lo is not None:
            result = [s for s in result if s.created >= lo]
        if hi is not None:
            result = [s for s in result if s.created <= hi]
        return result

    def shouts_text(self, **filters) -> str:
        lines = [render_text_line(iso8601(s.created), s.nick, s.message)
                 for s in self.list_shouts(**filters)]
        return "\n".join(lines) + ("\n" if lines else "")

    def shouts_json(self, **filters) -> str:
        entries = [shout_listing_entry(s) for s in self.list_shouts(**filters)]
        return json.dumps(entries, sort_keys=True)

    def session_view(self, session_id: str) -> dict:
        session = self._session(session_id)
        return {
            "id": session.id,
            "user": session.user,
            "origin": session.origin.value,
            "start": iso8601(session.start),
            "end": iso8601(session.end),
            "slot": session.slot_duration,
            "shouts": list(self.state.members.get(session_id, ())),
            "screencast": session.screencast,
            "open": session_id in self.state.open_sessions.values(),
            "report": self.state.reports.get(session_id),
            "validator": self.state.validators.get(session_id),
        }

    def report(self, n: int = 20) -> dict:
        """Latest shouts, open sessions, latest reviews, per-user counts."""
        with self._lock:
            ordered = sorted(self.state.shouts, key=lambda s: s.created)
            latest = [shout_listing_entry(s) for s in reversed(ordered[-n:])]
            open_sessions = [self.session_view(sid)
                             for sid in sorted(self.state.open_sessions.values())]
            reviews = sorted(self.state.reviews.values(),
                             key=lambda r: r.created, reverse=True)[:n]
            counts: dict[str, int] = {}
            for shout in self.state.shouts:
                counts[shout.nick] = counts.get(shout.nick, 0) + 1
        return {
            "latest": latest,
            "open_sessions": open_sessions,
            "latest_reviews": [jn.review_to_dict(r) for r in reviews],
            "counts_by_user": dict(sorted(counts.items())),
        }

    def close(self) -> None:
        self.journal.close()

"""Mine historical sources for shouts and import them without duplicates.

Sources are chat logs (regex with named captures), JSON dumps, or tabular
dumps. A candidate whose message text exactly matches any text already in
the corpus is discarded; comparison keys on the text alone by default, so
identical texts from different users are conflated on purpose.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from . import journal as jn
from .config import parse_kv
from .errors import BadPattern, UnreadableSource
from .model import Shout, Source, normalize_nick
from .parsing import DEFAULT_CONFIG, ParserConfig, flag_deviation, parse

DEFAULT_CHATLOG_PATTERN = (
    r"^\[(?P<timestamp>\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2})\] "
    r"<(?P<nick>[^>]+)> (?P<text>.*)$"
)
DEFAULT_PREFIX = ";aa "
DEFAULT_UBIQUITOUS_TAGS = frozenset({"aao0"})

_TS_FORMATS = (
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d",
)


class SourceKind(str, Enum):
    CHAT_LOG = "chatlog"
    JSON_DUMP = "jsondump"
    TABULAR_DUMP = "tabulardump"


@dataclass(frozen=True)
class SourceSpec:
    """Where and how to read one historical source."""

    kind: SourceKind
    path: str
    pattern: str = DEFAULT_CHATLOG_PATTERN
    mapping: dict | None = None
    timezone: str = "+0000"
    delimiter: str = "\t"

    def compiled_pattern(self) -> re.Pattern:
        try:
            compiled = re.compile(self.pattern)
        except re.error as exc:
            raise BadPattern(f"bad line pattern: {exc}") from exc
        missing = {"timestamp", "nick", "text"} - set(compiled.groupindex)
        if missing:
            raise BadPattern(f"pattern lacks named groups {sorted(missing)}")
        return compiled

    def field_map(self) -> dict:
        mapping = self.mapping or {}
        missing = {"nick", "message", "created"} - set(mapping)
        if missing:
            raise BadPattern(f"mapping lacks fields {sorted(missing)}")
        return mapping

    def utc_offset(self) -> int:
        tz = self.timezone.strip().upper()
        if tz in ("", "UTC", "Z"):
            return 0
        match = re.fullmatch(r"([+-])(\d{2}):?(\d{2})", tz)
        if not match:
            raise BadPattern(f"bad timezone offset {self.timezone!r}")
        sign = 1 if match.group(1) == "+" else -1
        return sign * (int(match.group(2)) * 3600 + int(match.group(3)) * 60)


@dataclass
class MiningReport:
    scanned: int = 0
    candidates: int = 0
    duplicates_discarded: int = 0
    kept: int = 0
    per_source: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scanned": self.scanned,
            "candidates": self.candidates,
            "duplicates_discarded": self.duplicates_discarded,
            "kept": self.kept,
            "per_source": self.per_source,
        }


@dataclass
class ParsedSource:
    candidates: list[Shout]
    scanned: int
    skipped: int


def _parse_timestamp(value, offset: int) -> int:
    if isinstance(value, (int, float)):
        return int(value)
    text = str(value).strip()
    if re.fullmatch(r"\d{9,}", text):
        return int(text)
    for fmt in _TS_FORMATS:
        try:
            naive = datetime.strptime(text, fmt)
        except ValueError:
            continue
        return int(naive.replace(tzinfo=timezone.utc).timestamp()) - offset
    raise ValueError(f"unparseable timestamp {value!r}")


def make_mined_shout(nick: str, text: str, created: int,
                     parser_config: ParserConfig = DEFAULT_CONFIG) -> Shout:
    """A candidate shout: parsed, whitespace-normalized, source=mined."""
    message = " ".join(text.split())
    parsed = parse(message, parser_config)
    return Shout(
        id=uuid.uuid4().hex,
        nick=normalize_nick(nick),
        message=message,
        created=created,
        source=Source.MINED,
        kind=parsed.kind,
        tags=parsed.tags,
        deviation=flag_deviation(parsed, parser_config),
        topic=parsed.topic,
    )


def parse_source(spec: SourceSpec,
                 parser_config: ParserConfig = DEFAULT_CONFIG) -> ParsedSource:
    """Extract candidate shouts; unparseable lines are counted, not fatal."""
    offset = spec.utc_offset()
    try:
        if spec.kind is SourceKind.CHAT_LOG:
            return _parse_chatlog(spec, offset, parser_config)
        if spec.kind is SourceKind.JSON_DUMP:
            return _parse_jsondump(spec, offset, parser_config)
        return _parse_tabular(spec, offset, parser_config)
    except OSError as exc:
        raise UnreadableSource(f"cannot read {spec.path}: {exc}") from exc


def _parse_chatlog(spec, offset, parser_config) -> ParsedSource:
    pattern = spec.compiled_pattern()
    candidates, scanned, skipped = [], 0, 0
    with open(spec.path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            scanned += 1
            match = pattern.match(line)
            if match is None:
                skipped += 1
                continue
            try:
                created = _parse_timestamp(match.group("timestamp"), offset)
                candidate = make_mined_shout(match.group("nick"),
                                             match.group("text"), created,
                                             parser_config)
            except Exception:  # noqa: BLE001 - malformed capture, count and move on
                skipped += 1
                continue
            candidates.append(candidate)
    return ParsedSource(candidates, scanned, skipped)


def _iter_json_records(path: str):
    with open(path, encoding="utf-8") as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "[":
            yield from json.load(fh)
        else:
            for line in fh:
                if line.strip():
                    yield json.loads(line)


def _parse_jsondump(spec, offset, parser_config) -> ParsedSource:
    mapping = spec.field_map()
    candidates, scanned, skipped = [], 0, 0
    for record in _iter_json_records(spec.path):
        scanned += 1
        try:
            created = _parse_timestamp(record[mapping["created"]], offset)
            candidate = make_mined_shout(record[mapping["nick"]],
                                         record[mapping["message"]], created,
                                         parser_config)
        except Exception:  # noqa: BLE001
            skipped += 1
            continue
        candidates.append(candidate)
    return ParsedSource(candidates, scanned, skipped)


def _parse_tabular(spec, offset, parser_config) -> ParsedSource:
    mapping = spec.field_map()
    candidates, scanned, skipped = [], 0, 0
    with open(spec.path, encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh, delimiter=spec.delimiter):
            scanned += 1
            try:
                created = _parse_timestamp(record[mapping["created"]], offset)
                candidate = make_mined_shout(record[mapping["nick"]],
                                             record[mapping["message"]], created,
                                             parser_config)
            except Exception:  # noqa: BLE001
                skipped += 1
                continue
            candidates.append(candidate)
    return ParsedSource(candidates, scanned, skipped)


def select_shouts(candidates: list[Shout], mode: str = "prefix", *,
                  prefix: str = DEFAULT_PREFIX,
                  tags: frozenset[str] = DEFAULT_UBIQUITOUS_TAGS,
                  parser_config: ParserConfig = DEFAULT_CONFIG) -> list[Shout]:
    """Keep the candidates that are actually shouts.

    prefix: keep prefixed messages, prefix stripped; tags: keep messages
    carrying a configured ubiquitous tag, text untouched; all: keep everything.
    """
    if mode == "all":
        return list(candidates)
    if mode == "prefix":
        kept = []
        for c in candidates:
            if c.message.startswith(prefix) and c.message[len(prefix):].strip():
                kept.append(make_mined_shout(c.nick, c.message[len(prefix):],
                                             c.created, parser_config))
        return kept
    if mode == "tags":
        return [c for c in candidates if any(t.name in tags for t in c.tags)]
    raise ValueError(f"unknown selection mode {mode!r}")


def dedup_key(shout: Shout, key: str = "text") -> object:
    """Comparison key: text alone by default, optionally (nick, text)."""
    text = shout.message.rstrip()
    if key == "nick-text":
        return (shout.nick, text)
    if key == "text":
        return text
    raise ValueError(f"unknown dedup key {key!r}")


def dedup(candidates: list[Shout], corpus: set, *, key: str = "text",
          scanned: int | None = None,
          per_source: dict | None = None) -> tuple[list[Shout], MiningReport]:
    """Discard candidates already present; first occurrence wins internally."""
    kept: list[Shout] = []
    seen: set = set()
    discarded = 0
    for candidate in candidates:
        k = dedup_key(candidate, key)
        if k in corpus or k in seen:
            discarded += 1
            continue
        seen.add(k)
        kept.append(candidate)
    report = MiningReport(
        scanned=len(candidates) if scanned is None else scanned,
        candidates=len(candidates),
        duplicates_discarded=discarded,
        kept=len(kept),
        per_source=per_source or {},
    )
    return kept, report


def corpus_from_journal(path: str, key: str = "text") -> set:
    """The set of stored message texts (or nick/text pairs) in a journal."""
    state = jn.replay(path)
    return {dedup_key(s, key) for s in state.shouts}


def import_shouts(journal_path: str, kept: list[Shout]) -> int:
    """Append kept shouts to the journal in one staged write."""
    if not kept:
        return 0
    state = jn.replay(journal_path)
    journal = jn.Journal(journal_path, next_seq=state.last_seq + 1)
    written = int(datetime.now(timezone.utc).timestamp())
    try:
        journal.append_many([(jn.SHOUT, jn.shout_to_dict(s)) for s in kept], written)
    finally:
        journal.close()
    return len(kept)


def load_source_spec(path: str) -> SourceSpec:
    """Read one source spec from a key=value file."""
    try:
        with open(path, encoding="utf-8") as fh:
            values = parse_kv(fh.read())
    except OSError as exc:
        raise UnreadableSource(f"cannot read source spec {path}: {exc}") from exc
    if "path" not in values:
        raise BadPattern(f"{path}: source spec needs a 'path' entry")
    try:
        kind = SourceKind(values.get("kind", "chatlog"))
    except ValueError as exc:
        raise BadPattern(f"{path}: unknown source kind {values['kind']!r}") from exc
    mapping = None
    if "mapping" in values:
        mapping = {}
        for pair in values["mapping"].split(","):
            target, _, source_field = pair.partition("=")
            mapping[target.strip()] = source_field.strip()
    return SourceSpec(
        kind=kind,
        path=values["path"],
        pattern=values.get("pattern", DEFAULT_CHATLOG_PATTERN),
        mapping=mapping,
        timezone=values.get("timezone", "+0000"),
        delimiter=values.get("delimiter", "\t"),
    )


def mine(specs: list[SourceSpec], mode: str, corpus_path: str | None, *,
         key: str = "text", dry_run: bool = False,
         prefix: str = DEFAULT_PREFIX,
         tags: frozenset[str] = DEFAULT_UBIQUITOUS_TAGS,
         parser_config: ParserConfig = DEFAULT_CONFIG) -> MiningReport:
    """Full pipeline: parse every source, select, dedup, and import."""
    all_candidates: list[Shout] = []
    per_source: dict = {}
    scanned = 0
    for spec in specs:
        outcome = parse_source(spec, parser_config)
        selected = select_shouts(outcome.candidates, mode, prefix=prefix,
                                 tags=tags, parser_config=parser_config)
        per_source[spec.path] = {
            "scanned": outcome.scanned,
            "skipped": outcome.skipped,
            "candidates": len(selected),
        }
        scanned += outcome.scanned
        all_candidates.extend(selected)
    corpus = corpus_from_journal(corpus_path, key) if corpus_path else set()
    kept, report = dedup(all_candidates, corpus, key=key, scanned=scanned,
                         per_source=per_source)
    if not dry_run and corpus_path:
        import_shouts(corpus_path, kept)
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="aa-mine",
                                     description="Mine historical logs for shouts")
    parser.add_argument("--source", action="append", required=True,
                        help="source spec file (repeatable)")
    parser.add_argument("--mode", choices=("prefix", "tags", "all"),
                        default="prefix")
    parser.add_argument("--corpus", help="journal to dedup against and import into")
    parser.add_argument("--dry-run", action="store_true")
    parser.add_argument("--key", choices=("text", "nick-text"), default="text",
                        help="dedup key; nick-text departs from text-only matching")
    parser.add_argument("--prefix", default=DEFAULT_PREFIX)
    parser.add_argument("--tags", default="aao0",
                        help="comma-separated ubiquitous tag names for tags mode")
    args = parser.parse_args(argv)

    tags = frozenset(t.strip().lower() for t in args.tags.split(",") if t.strip())
    try:
        specs = [load_source_spec(p) for p in args.source]
        report = mine(specs, args.mode, args.corpus, key=args.key,
                      dry_run=args.dry_run, prefix=args.prefix, tags=tags)
    except (BadPattern, UnreadableSource) as exc:
        print(f"aa-mine: {exc}", file=sys.stderr)
        return 2
    json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

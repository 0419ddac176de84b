"""File-backed forward name registry with first-claim reservation.

On-disk layout under the configured root (UTF-8, LF, no BOM):

    <name>.fwd    first line "node:port", or empty file = disabled
    <name>.meta   uid=<n>\ngid=<n>\nmode=<octal>\ncreated=<unix-seconds>\n

A name is reserved by whoever creates it first and stays reserved until the
owner releases it; truncating the destination disables the forward without
giving up the name. The execute permission bits of mode govern who may
connect (owner class first, then group, then other; the first class that
applies decides). Only the owner may mutate or release a record.

Claim protocol: the meta block is staged in a uniquely named temp file, the
create-exclusive of <name>.fwd is the linearization point deciding the
winner, and the rename of the staged meta into <name>.meta commits the
claim. The loader drops any .fwd without .meta (crash between those steps)
so a restart reconstructs exactly the committed map.
"""

from __future__ import annotations

import itertools
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import MalformedMode, MalformedTarget, NameTaken, NotFound, NotOwner
from .principals import Principal
from .routing import validate_name, validate_node, validate_port

log = logging.getLogger(__name__)

FWD_SUFFIX = ".fwd"
META_SUFFIX = ".meta"
DEFAULT_MODE = 0o700

_claim_seq = itertools.count()


@dataclass(frozen=True)
class ForwardRecord:
    name: str
    owner_uid: int
    group_gid: int
    mode: int  # 3-digit octal bits; only execute bits carry meaning here
    destination: tuple[str, int] | None  # None = disabled
    created_at: int

    @property
    def enabled(self) -> bool:
        return self.destination is not None


def parse_mode(mode: int | str) -> int:
    """Accept 750-style strings or ints already in [0, 0o777]."""
    if isinstance(mode, str):
        if len(mode) != 3 or any(c not in "01234567" for c in mode):
            raise MalformedMode(f"mode {mode!r} is not 3 octal digits")
        return int(mode, 8)
    if isinstance(mode, int) and 0 <= mode <= 0o777:
        return mode
    raise MalformedMode(f"mode {mode!r} out of range")


def check_connect_permission(record: ForwardRecord, principal: Principal) -> bool:
    """Unix-style first-matching-class execute check."""
    digits = format(record.mode, "03o")
    if principal.uid == record.owner_uid:
        cls = 0
    elif record.group_gid in principal.groups:
        cls = 1
    else:
        cls = 2
    return int(digits[cls]) & 1 == 1


def parse_destination(node: str, port: int) -> tuple[str, int]:
    return validate_node(node), validate_port(port)


class ForwardStore:
    """Mutations are serialized and linearizable per store; reads see either
    the prior or the new committed record, never a torn one (records are
    immutable and swapped whole)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: dict[str, ForwardRecord] = {}
        self._load()

    # -- operations -----------------------------------------------------------

    def claim(self, name: str, principal: Principal) -> ForwardRecord:
        validate_name(name)
        record = ForwardRecord(
            name=name,
            owner_uid=principal.uid,
            group_gid=principal.primary_gid,
            mode=DEFAULT_MODE,
            destination=None,
            created_at=int(time.time()),
        )
        with self._lock:
            if name in self._entries:
                raise NameTaken(name)
            tmp = self.root / f".claim-{os.getpid()}-{next(_claim_seq)}.tmp"
            tmp.write_bytes(self._meta_bytes(record))
            try:
                fd = os.open(self._fwd_path(name), os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                tmp.unlink(missing_ok=True)
                raise NameTaken(name) from None
            os.close(fd)
            os.replace(tmp, self._meta_path(name))
            self._entries[name] = record
            return record

    def release(self, name: str, principal: Principal) -> None:
        with self._lock:
            record = self._require(name)
            self._require_owner(record, principal)
            os.unlink(self._fwd_path(name))
            self._meta_path(name).unlink(missing_ok=True)
            del self._entries[name]

    def set_destination(self, name: str, principal: Principal,
                        destination: tuple[str, int] | None) -> ForwardRecord:
        if destination is not None:
            destination = parse_destination(destination[0], destination[1])
        with self._lock:
            record = self._require(name)
            self._require_owner(record, principal)
            payload = b"" if destination is None else f"{destination[0]}:{destination[1]}\n".encode()
            self._write_atomic(self._fwd_path(name), payload)
            updated = replace(record, destination=destination)
            self._entries[name] = updated
            return updated

    def set_access(self, name: str, principal: Principal, mode: int | str) -> ForwardRecord:
        bits = parse_mode(mode)
        with self._lock:
            record = self._require(name)
            self._require_owner(record, principal)
            updated = replace(record, mode=bits)
            self._write_atomic(self._meta_path(name), self._meta_bytes(updated))
            self._entries[name] = updated
            return updated

    def lookup(self, name: str) -> ForwardRecord:
        record = self._entries.get(name)
        if record is None:
            raise NotFound(f"forward {name!r}")
        return record

    def get(self, name: str) -> ForwardRecord | None:
        return self._entries.get(name)

    def records(self) -> list[ForwardRecord]:
        return sorted(self._entries.values(), key=lambda r: r.name)

    # -- helpers -------------------------------------------------------------

    def _require(self, name: str) -> ForwardRecord:
        record = self._entries.get(name)
        if record is None:
            raise NotFound(f"forward {name!r}")
        return record

    @staticmethod
    def _require_owner(record: ForwardRecord, principal: Principal) -> None:
        if principal.uid != record.owner_uid:
            raise NotOwner(f"forward {record.name!r} is owned by uid {record.owner_uid}")

    def _fwd_path(self, name: str) -> Path:
        return self.root / (name + FWD_SUFFIX)

    def _meta_path(self, name: str) -> Path:
        return self.root / (name + META_SUFFIX)

    @staticmethod
    def _meta_bytes(record: ForwardRecord) -> bytes:
        return (f"uid={record.owner_uid}\ngid={record.group_gid}\n"
                f"mode={record.mode:03o}\ncreated={record.created_at}\n").encode("utf-8")

    def _write_atomic(self, path: Path, payload: bytes) -> None:
        tmp = path.with_name(f".{path.name}-{os.getpid()}-{next(_claim_seq)}.tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)

    # -- startup reconstruction ------------------------------------------------

    def _load(self) -> None:
        for stray in self.root.glob(".*.tmp"):
            stray.unlink(missing_ok=True)
        for fwd in self.root.glob("*" + FWD_SUFFIX):
            name = fwd.name[: -len(FWD_SUFFIX)]
            meta = self._meta_path(name)
            if not meta.exists():
                log.warning("dropping uncommitted claim %r", name)
                fwd.unlink(missing_ok=True)
                continue
            try:
                record = self._parse_record(name, fwd, meta)
            except (ValueError, MalformedTarget) as exc:
                log.warning("skipping unreadable forward %r: %s", name, exc)
                continue
            self._entries[name] = record
        for meta in self.root.glob("*" + META_SUFFIX):
            name = meta.name[: -len(META_SUFFIX)]
            if name not in self._entries:
                meta.unlink(missing_ok=True)

    @staticmethod
    def _parse_meta(meta_text: str) -> dict[str, str]:
        fields = {}
        for line in meta_text.splitlines():
            key, _, value = line.partition("=")
            if key:
                fields[key] = value
        return fields

    def _parse_record(self, name: str, fwd: Path, meta: Path) -> ForwardRecord:
        fields = self._parse_meta(meta.read_text("utf-8"))
        first_line = fwd.read_text("utf-8").split("\n", 1)[0].strip()
        destination: tuple[str, int] | None = None
        if first_line:
            node, _, port_s = first_line.rpartition(":")
            destination = parse_destination(node, int(port_s)) if port_s.isdigit() else None
            if destination is None:
                log.warning("forward %r has unparseable destination %r; treating as disabled",
                            name, first_line)
        return ForwardRecord(
            name=name,
            owner_uid=int(fields["uid"]),
            group_gid=int(fields["gid"]),
            mode=int(fields["mode"], 8),
            destination=destination,
            created_at=int(fields["created"]),
        )

"""Durable state for the authorities: serial counters and issuance bindings.

Backed by SQLite in write-ahead-log mode.  Serial allocation and the rows it
produces commit in one transaction, so a serial is never handed out twice,
even across a crash and restart.
"""

from __future__ import annotations

import os
import sqlite3
import threading
from contextlib import contextmanager
from typing import Iterable, Iterator, Optional, Tuple

MEMORY = ":memory:"


class Store:
    schema: Tuple[str, ...] = ()

    def __init__(self, path: str | os.PathLike = MEMORY, synchronous: str = "NORMAL"):
        self.path = str(path)
        self._lock = threading.RLock()
        self._db = sqlite3.connect(self.path, check_same_thread=False, isolation_level=None)
        if self.path != MEMORY:
            self._db.execute("PRAGMA journal_mode=WAL")
        self._db.execute(f"PRAGMA synchronous={synchronous}")
        with self.transaction() as cur:
            cur.execute("CREATE TABLE IF NOT EXISTS counters (name TEXT PRIMARY KEY, value INTEGER NOT NULL)")
            for stmt in self.schema:
                cur.execute(stmt)

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Cursor]:
        with self._lock:
            cur = self._db.cursor()
            cur.execute("BEGIN IMMEDIATE")
            try:
                yield cur
            except BaseException:
                cur.execute("ROLLBACK")
                raise
            else:
                cur.execute("COMMIT")

    def allocate(self, cur: sqlite3.Cursor, name: str, n: int = 1) -> int:
        """Reserve ``n`` consecutive serials inside ``cur``'s transaction; return the first."""
        row = cur.execute("SELECT value FROM counters WHERE name = ?", (name,)).fetchone()
        first = (row[0] if row else 0) + 1
        cur.execute(
            "INSERT INTO counters (name, value) VALUES (?, ?) "
            "ON CONFLICT(name) DO UPDATE SET value = excluded.value",
            (name, first + n - 1),
        )
        return first

    def counter(self, name: str) -> int:
        with self._lock:
            row = self._db.execute("SELECT value FROM counters WHERE name = ?", (name,)).fetchone()
        return row[0] if row else 0

    def query_one(self, sql: str, args: Iterable = ()) -> Optional[tuple]:
        with self._lock:
            return self._db.execute(sql, tuple(args)).fetchone()

    def query_all(self, sql: str, args: Iterable = ()) -> list:
        with self._lock:
            return self._db.execute(sql, tuple(args)).fetchall()

    def close(self) -> None:
        with self._lock:
            self._db.close()


class LtcaStore(Store):
    schema = (
        "CREATE TABLE IF NOT EXISTS registry ("
        " subject_id BLOB PRIMARY KEY, ltc BLOB NOT NULL, ltc_digest BLOB NOT NULL UNIQUE)",
        "CREATE TABLE IF NOT EXISTS tickets ("
        " serial INTEGER PRIMARY KEY, ticket BLOB NOT NULL,"
        " rnd_ik_tkt BLOB NOT NULL, ltc_digest BLOB NOT NULL)",
    )


class PcaStore(Store):
    schema = (
        "CREATE TABLE IF NOT EXISTS pseudonyms ("
        " serial INTEGER PRIMARY KEY, pseudonym BLOB NOT NULL, rnd_ik BLOB NOT NULL,"
        " ticket_serial INTEGER NOT NULL, ticket_ik BLOB NOT NULL)",
        "CREATE TABLE IF NOT EXISTS used_tickets (ticket_ik BLOB PRIMARY KEY, ticket_serial INTEGER NOT NULL)",
    )

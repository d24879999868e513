"""Append-only JSON-lines run storage with replay."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path


class UnknownRun(Exception):
    pass


@dataclass
class StoredRecord:
    seq: int
    record: dict


class RunStore:
    """One append-only JSONL file per run; sequence numbers contiguous from 1."""

    def __init__(self, runs_dir: str | Path, run_id: str, metadata: dict | None = None):
        self.run_id = run_id
        self.path = Path(runs_dir) / f"{run_id}.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._seq = 0
        self._records: list[StoredRecord] = []
        if self.path.exists():
            self._replay()
        elif metadata is not None:
            self._fh = self.path.open("a", encoding="utf-8")
            self.append({"type": "meta", **metadata})
            return
        self._fh = self.path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                self._seq = obj["seq"]
                self._records.append(StoredRecord(obj["seq"], obj))

    def append(self, record: dict) -> int:
        self._seq += 1
        obj = {"seq": self._seq, **record}
        self._fh.write(json.dumps(obj, sort_keys=True) + "\n")
        self._fh.flush()
        self._records.append(StoredRecord(self._seq, obj))
        return self._seq

    def fsync(self) -> None:
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self.fsync()
        self._fh.close()

    @property
    def last_seq(self) -> int:
        return self._seq

    def records(
        self,
        after: int = 0,
        limit: int | None = None,
        node_ids: set[str] | None = None,
        kinds: set[str] | None = None,
        time_range_us: tuple[int, int] | None = None,
    ) -> list[dict]:
        out = []
        for sr in self._records:
            if sr.seq <= after:
                continue
            rec = sr.record
            if node_ids is not None and rec.get("node_id") not in node_ids:
                continue
            if kinds is not None and rec.get("type") not in kinds:
                continue
            if time_range_us is not None:
                ts = rec.get("ts_gps")
                if ts is None or not (time_range_us[0] <= ts <= time_range_us[1]):
                    continue
            out.append(rec)
            if limit is not None and len(out) >= limit:
                break
        return out

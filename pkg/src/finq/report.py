"""Residual records and reports shared by every check in the package."""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, asdict


@dataclass
class CheckRecord:
    check_id: str
    paper_anchor: str
    residual: float
    threshold: float
    wall_time: float = 0.0
    note: str = ""

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.threshold

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["residual"] = float(self.residual)
        d["verdict"] = self.verdict
        if not timing:
            d.pop("wall_time")
        if not self.note:
            d.pop("note")
        return d


@dataclass
class Report:
    records: list = field(default_factory=list)
    title: str = ""

    def add(self, check_id, anchor, residual, threshold, wall_time=0.0, note="") -> CheckRecord:
        rec = CheckRecord(check_id, anchor, float(residual), float(threshold), wall_time, note)
        self.records.append(rec)
        return rec

    def extend(self, other: "Report") -> None:
        self.records.extend(other.records)

    @contextmanager
    def timed(self, check_id, anchor, threshold, note=""):
        """Time a block that stores its residual in the yielded dict under 'residual'."""
        box = {"residual": math.inf}
        t0 = time.perf_counter()
        try:
            yield box
        finally:
            self.add(check_id, anchor, box["residual"], threshold, time.perf_counter() - t0,
                     box.get("note", note))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list:
        return [r for r in self.records if not r.passed]

    def residuals(self) -> dict:
        return {r.check_id: r.residual for r in self.records}

    def __getitem__(self, check_id) -> CheckRecord:
        for r in self.records:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    def __len__(self):
        return len(self.records)

    def sorted(self) -> "Report":
        return Report(sorted(self.records, key=lambda r: r.check_id), self.title)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "n_checks": len(self.records),
            "n_failed": len(self.failures()),
            "checks": [r.to_dict(timing) for r in self.records],
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = []
        if self.title:
            lines.append(f"# {self.title}")
        width = max((len(r.check_id) for r in self.records), default=10)
        for r in self.records:
            lines.append(f"{r.verdict.upper():4}  {r.check_id:<{width}}  "
                         f"res={r.residual:.3e}  thr={r.threshold:.1e}  [{r.paper_anchor}]")
        lines.append(f"{len(self.records) - len(self.failures())}/{len(self.records)} checks passed")
        return "\n".join(lines)


ValidationReport = Report

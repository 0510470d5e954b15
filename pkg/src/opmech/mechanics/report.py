"""Verification reports: rows of (name, expected, got, pass)."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field


@dataclass
class ReportRow:
    name: str
    expected: str
    got: str
    passed: bool


@dataclass
class Report:
    title: str
    rows: list[ReportRow] = field(default_factory=list)

    def add(self, name, expected, got, passed) -> ReportRow:
        r = ReportRow(str(name), str(expected), str(got), bool(passed))
        self.rows.append(r)
        return r

    def extend(self, other: "Report", prefix: str | None = None):
        for r in other.rows:
            name = f"{prefix}: {r.name}" if prefix else r.name
            self.rows.append(ReportRow(name, r.expected, r.got, r.passed))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[ReportRow]:
        return [r for r in self.rows if not r.passed]

    def __getitem__(self, name: str) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"# {self.title}"]
        for r in self.rows:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(f"{flag}  {r.name}  expected={r.expected}  got={r.got}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["report", "name", "expected", "got", "pass"])
        for r in self.rows:
            w.writerow([self.title, r.name, r.expected, r.got, int(r.passed)])
        return buf.getvalue()

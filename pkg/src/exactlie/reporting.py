"""Pass/fail check collections shared by the verification entry points."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckEntry:
    name: str
    status: str                # "pass" | "fail" | "error"
    expected: str = ""
    actual: str = ""
    source: str = ""           # short tag of the mathematical claim being checked

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass
class Report:
    entries: list = field(default_factory=list)

    def check(self, name, ok, expected="", actual="", source=""):
        self.entries.append(CheckEntry(
            name=name,
            status="pass" if ok else "fail",
            expected=str(expected),
            actual=str(actual),
            source=source,
        ))
        return ok

    def error(self, name, message, source=""):
        self.entries.append(CheckEntry(
            name=name, status="error", expected="", actual=str(message),
            source=source))

    def extend(self, other: "Report", prefix: str = ""):
        for e in other.entries:
            self.entries.append(CheckEntry(
                name=prefix + e.name, status=e.status,
                expected=e.expected, actual=e.actual, source=e.source))

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def counts(self):
        n = {"pass": 0, "fail": 0, "error": 0}
        for e in self.entries:
            n[e.status] += 1
        return n

    def failures(self):
        return [e for e in self.entries if not e.ok]

    def __str__(self):
        lines = []
        for e in sorted(self.entries, key=lambda e: e.name):
            lines.append(f"[{e.status.upper():5s}] {e.name}"
                         + (f" expected={e.expected} actual={e.actual}"
                            if not e.ok else ""))
        c = self.counts
        lines.append(f"{c['pass']} passed, {c['fail']} failed, {c['error']} errors")
        return "\n".join(lines)

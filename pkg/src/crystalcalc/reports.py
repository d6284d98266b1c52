"""Check reports shared by the verification operations and the CLI.

A report is a flat, deterministic key/value structure; rendering sorts
result lines so identical inputs produce byte-identical files.
"""

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    name: str
    passed: bool
    inconclusive: bool = False
    witness: str = ""
    details: dict = field(default_factory=dict)

    def require(self, exc_cls=AssertionError):
        """Raise the given error (with the witness) unless the check passed."""
        if not self.passed:
            if exc_cls is AssertionError:
                raise AssertionError(f"{self.name} failed: {self.witness}")
            raise exc_cls(f"{self.name}: {self.witness}", witness=self.details)
        return self

    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def lines(self):
        out = [f"check: {self.name}", f"status: {self.status()}"]
        if self.witness:
            out.append(f"witness: {self.witness}")
        for k in sorted(self.details):
            v = self.details[k]
            if isinstance(v, (list, tuple)):
                v = " ".join(str(x) for x in v)
            out.append(f"  {k}: {v}")
        return out


def merge_reports(name, reports):
    passed = all(r.passed for r in reports)
    inconclusive = any(r.inconclusive for r in reports)
    witness = next((r.witness for r in reports if not r.passed and r.witness), "")
    details = {}
    for i, r in enumerate(reports):
        details[f"{i:03d}:{r.name}"] = r.status()
    return CheckReport(name, passed, inconclusive, witness, details)

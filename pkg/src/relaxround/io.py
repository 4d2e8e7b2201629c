"""Interchange formats: instance documents, outcomes, and reports.

Rationals travel as "p/q" strings so every round trip is bit exact.
Instance documents are JSON objects {family, n, m, valuations, ...}; the
loader rebuilds instances through the family constructors, so a loaded
instance passes the same construction-time audits as a fresh one.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .model import (AdditiveValuation, Instance, SingleMindedValuation,
                    SinglePeakedValuation, TableValuation, Valuation,
                    ValuationProfile)
from .mechanism import MechanismOutcome
from .rounding import AllocationDistribution, ConvexDecomposition
from .verify import VerificationReport
from . import families

PAYMENT_RULES = ("expected-vcg", "first-price")


class FormatError(ValueError):
    """Malformed document; the message names the offending field."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"field {fieldname!r}: {message}")
        self.fieldname = fieldname


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(obj: Any, fieldname: str = "value") -> Fraction:
    if isinstance(obj, bool):
        raise FormatError(fieldname, "expected a rational, got a boolean")
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, str):
        try:
            return Fraction(obj)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(fieldname, f"not a rational: {obj!r}") from exc
    raise FormatError(fieldname, f"expected int or 'p/q' string, "
                                 f"got {type(obj).__name__}")


def _require(obj: dict, key: str, fieldname: str | None = None) -> Any:
    if key not in obj:
        raise FormatError(fieldname or key, "missing required field")
    return obj[key]


def valuation_to_obj(v: Valuation) -> dict:
    if isinstance(v, AdditiveValuation):
        return {"kind": "additive",
                "values": [format_fraction(x) for x in v.item_values]}
    if isinstance(v, SingleMindedValuation):
        return {"kind": "single-minded", "bundle": sorted(v.bundle),
                "value": format_fraction(v.value)}
    if isinstance(v, TableValuation):
        return {"kind": "table",
                "entries": [[sorted(b), format_fraction(x)]
                            for b, x in v.entries]}
    if isinstance(v, SinglePeakedValuation):
        return {"kind": "single-peaked", "peak": format_fraction(v.peak)}
    raise TypeError(f"unknown valuation type {type(v).__name__}")


def valuation_from_obj(obj: Any, fieldname: str) -> Valuation:
    if not isinstance(obj, dict):
        raise FormatError(fieldname, "valuations must be objects")
    kind = _require(obj, "kind", f"{fieldname}.kind")
    try:
        if kind == "additive":
            values = _require(obj, "values", f"{fieldname}.values")
            return AdditiveValuation(tuple(
                parse_fraction(x, f"{fieldname}.values[{i}]")
                for i, x in enumerate(values)))
        if kind == "single-minded":
            bundle = _require(obj, "bundle", f"{fieldname}.bundle")
            value = parse_fraction(_require(obj, "value", f"{fieldname}.value"),
                                   f"{fieldname}.value")
            return SingleMindedValuation(frozenset(int(j) for j in bundle),
                                         value)
        if kind == "table":
            entries = _require(obj, "entries", f"{fieldname}.entries")
            return TableValuation(tuple(
                (frozenset(int(j) for j in bundle),
                 parse_fraction(value, f"{fieldname}.entries[{i}]"))
                for i, (bundle, value) in enumerate(entries)))
        if kind == "single-peaked":
            peak = parse_fraction(_require(obj, "peak", f"{fieldname}.peak"),
                                  f"{fieldname}.peak")
            return SinglePeakedValuation(peak)
    except FormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise FormatError(fieldname, str(exc)) from exc
    raise FormatError(f"{fieldname}.kind", f"unknown valuation kind {kind!r}")


def dump_instance_document(instance: Instance, profile: ValuationProfile,
                           payment_rule: str = "expected-vcg") -> dict:
    doc: dict[str, Any] = {"family": instance.family, "n": instance.n,
                           "m": instance.m}
    if instance.family == "single-minded-ca":
        doc["alpha"] = format_fraction(instance.spec.alpha)
    if instance.family == "case-b":
        doc["beta"] = format_fraction(instance.spec.beta)
    if instance.family == "gap-toy":
        doc["segments"] = len(instance.spec.curve) - 1
    doc["valuations"] = [valuation_to_obj(v) for v in profile.valuations]
    if payment_rule != "expected-vcg":
        doc["payment_rule"] = payment_rule
    return doc


def load_instance_document(obj: Any) -> tuple[Instance, ValuationProfile, str]:
    if not isinstance(obj, dict):
        raise FormatError("document", "top level must be a JSON object")
    family = _require(obj, "family")
    n = _require(obj, "n")
    m = _require(obj, "m")
    if not isinstance(n, int) or not isinstance(m, int):
        raise FormatError("n/m", "bidder and item counts must be integers")
    raw_vals = _require(obj, "valuations")
    if not isinstance(raw_vals, list) or len(raw_vals) != n:
        raise FormatError("valuations", f"expected a list of {n} valuations")
    valuations = tuple(valuation_from_obj(v, f"valuations[{i}]")
                       for i, v in enumerate(raw_vals))
    profile = ValuationProfile(valuations)
    try:
        if family == "single-item":
            if m != 1:
                raise FormatError("m", "single-item instances have m = 1")
            instance = families.make_single_item(n)
        elif family == "case-b":
            beta = parse_fraction(_require(obj, "beta"), "beta")
            if m != 1:
                raise FormatError("m", "case-b instances have m = 1")
            instance = families.make_case_b_family(n, beta)
        elif family == "single-minded-ca":
            bundles = []
            for i, v in enumerate(valuations):
                if not isinstance(v, SingleMindedValuation):
                    raise FormatError(f"valuations[{i}].kind",
                                      "single-minded valuation required")
                bundles.append(v.bundle)
            alpha = parse_fraction(obj.get("alpha", "1/2"), "alpha")
            instance = families.make_single_minded_ca(m, bundles, alpha)
        elif family == "gap-toy":
            segments = obj.get("segments", families.DEFAULT_CURVE_SEGMENTS)
            if not isinstance(segments, int) or segments < 1:
                raise FormatError("segments", "must be a positive integer")
            instance = families.make_gap_toy(n, m, segments)
        elif family == "no-money-lottery":
            if m != 1:
                raise FormatError("m", "lottery instances have m = 1")
            instance = families.make_no_money(n, "lottery")
        elif family == "single-peaked":
            instance = families.make_no_money(n, "single_peaked", positions=m)
        else:
            raise FormatError("family", f"unknown family {family!r}")
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError("family", str(exc)) from exc
    from .model import validate_profile
    try:
        validate_profile(instance, profile)
    except ValueError as exc:
        raise FormatError("valuations", str(exc)) from exc
    payment_rule = obj.get("payment_rule", "expected-vcg")
    if payment_rule not in PAYMENT_RULES:
        raise FormatError("payment_rule",
                          f"must be one of {PAYMENT_RULES}")
    return instance, profile, payment_rule


def load_instance(path: str | Path) -> tuple[Instance, ValuationProfile]:
    """Parse and validate an instance file; see the JSON schema in README."""
    text = Path(path).read_text(encoding="utf-8")
    instance, profile, _ = load_instance_document(json.loads(text))
    return instance, profile


def write_instance(path: str | Path, instance: Instance,
                   profile: ValuationProfile,
                   payment_rule: str = "expected-vcg") -> None:
    doc = dump_instance_document(instance, profile, payment_rule)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def distribution_rows(dist: AllocationDistribution) -> list[dict]:
    """Ordered dump rows: allocation bitmask per bidder plus probability."""
    return [{"bundles": list(alloc.bitmasks()),
             "probability": format_fraction(p)}
            for alloc, p in dist.entries]


def decomposition_rows(decomposition: ConvexDecomposition) -> list[dict]:
    return [{"bundles": list(alloc.bitmasks()),
             "weight": format_fraction(w)}
            for w, alloc in decomposition.terms]


def outcome_to_obj(outcome: MechanismOutcome) -> dict:
    return {
        "seed": outcome.seed,
        "relaxed_value": format_fraction(outcome.relaxed_value),
        "calibration": format_fraction(outcome.calibration),
        "distribution": distribution_rows(outcome.distribution),
        "expected_payments": [format_fraction(p)
                              for p in outcome.expected_payments],
        "realized": list(outcome.realized.bitmasks()),
        "winners": list(outcome.realized.winners()),
    }


def report_to_obj(report: VerificationReport) -> dict:
    return {
        "passed": report.passed,
        "cases": report.cases,
        "checks": [{
            "name": c.name,
            "passed": c.passed,
            "cases": c.cases,
            "domain": c.domain,
            "witnesses": [{
                "profile": w.profile,
                "bidder": w.bidder,
                "misreport": w.misreport,
                "lhs": format_fraction(w.lhs),
                "rhs": format_fraction(w.rhs),
            } for w in c.witnesses],
        } for c in report.checks],
    }


CSV_COLUMNS = ("check", "profile_id", "bidder", "misreport", "lhs", "rhs",
               "pass")


def report_csv_rows(report: VerificationReport) -> list[tuple]:
    """One row per witness on failure, one summary row per passing check."""
    rows: list[tuple] = []
    for c in report.checks:
        if c.passed:
            rows.append((c.name, f"{c.cases} cases", "", "", "", "", "pass"))
        else:
            for w in c.witnesses:
                rows.append((c.name, w.profile,
                             "" if w.bidder is None else w.bidder,
                             w.misreport, format_fraction(w.lhs),
                             format_fraction(w.rhs), "fail"))
    return rows


def write_report_files(report: VerificationReport, outdir: str | Path,
                       formats: str = "both",
                       stem: str = "report") -> list[Path]:
    """Write report.json / report.csv; returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if formats in ("json", "both"):
        path = outdir / f"{stem}.json"
        path.write_text(json.dumps(report_to_obj(report), indent=2) + "\n",
                        encoding="utf-8")
        written.append(path)
    if formats in ("csv", "both"):
        path = outdir / f"{stem}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            writer.writerows(report_csv_rows(report))
        written.append(path)
    return written


def write_witness_file(report: VerificationReport,
                       outdir: str | Path) -> Path | None:
    """Dump only the failing rows; None when everything passed."""
    if report.passed:
        return None
    failing = VerificationReport(tuple(c for c in report.checks
                                       if not c.passed))
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "witness.json"
    path.write_text(json.dumps(report_to_obj(failing), indent=2) + "\n",
                    encoding="utf-8")
    return path

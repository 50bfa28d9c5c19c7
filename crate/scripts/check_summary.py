#!/usr/bin/env python3
"""Recompute a run summary from its per-tick CSV and compare.

usage: check_summary.py LOG.csv SUMMARY.json [--tol 1e-9]

Exits 0 when every mean, std and count matches within the tolerance.
"""
import argparse
import csv
import json
import math
import sys

FLAGS = ["no_go_zone", "below_floor", "proximity", "joint_limit", "side_orientation"]
PLAIN = ["vva_deg", "fd_mm", "fd_signed_mm", "pf_deg", "an_deg", "pn_mm"]
CENTROID = ["l2_pix", "l2_pct", "u_err_pix", "u_err_pct", "v_err_pix", "v_err_pct"]


def stat(values):
    n = len(values)
    if n == 0:
        return {"mean": None, "std": None, "count": 0}
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    return {"mean": mean, "std": std, "count": n}


def close(a, b, tol):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("summary")
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    with open(args.csv, newline="") as f:
        rows = list(csv.DictReader(f))
    with open(args.summary) as f:
        summary = json.load(f)

    series = {}
    for row in rows:
        wc = any(row[c] == "1" for c in FLAGS) or row["solver"] == "constrained"
        values = {name: float(row[name]) for name in PLAIN}
        values["lt_ms"] = float(row["loop_time_ms"])
        for side in ("left", "right"):
            if row[f"{side}_visible"] == "1":
                for c in CENTROID:
                    values[f"{side}_{c}"] = float(row[f"{side}_{c}"])
        for name, v in values.items():
            s = series.setdefault(name, {"all": [], "woc": [], "wc": []})
            s["all"].append(v)
            s["wc" if wc else "woc"].append(v)

    failures = []
    for name, split in summary["metrics"].items():
        for part in ("all", "woc", "wc"):
            got = stat(series.get(name, {}).get(part, []))
            want = split[part]
            if got["count"] != want["count"] or not all(close(got[k], want[k], args.tol) for k in ("mean", "std")):
                failures.append(f"{name}/{part}: recomputed {got}, summary {want}")
    visible = sum(1 for r in rows if r["left_visible"] == "1" or r["right_visible"] == "1")
    any_pct = 100.0 * visible / len(rows) if rows else 0.0
    if not close(any_pct, summary["visibility"]["any_pct"], args.tol):
        failures.append(f"visibility: recomputed {any_pct}, summary {summary['visibility']['any_pct']}")
    if len(rows) != summary["ticks"]:
        failures.append(f"ticks: {len(rows)} rows, summary {summary['ticks']}")

    for line in failures:
        print(line)
    print(f"{'FAIL' if failures else 'OK'}: {len(rows)} rows, {len(summary['metrics'])} metrics checked")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Batch experiments: cage reproductions, a random sweep, canonical certificates.

Writes plot-ready CSVs under results/ (ratio vs k, contraction histogram) and
prints a one-line summary per experiment.  Everything is seeded and reruns are
byte-identical.
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from greedysf.cli import main as cli_main
from greedysf.instances import (
    gen_girth_lower_bound,
    gen_random_instance,
    serialize_instance,
)
from greedysf.greedy import compare_rules

RESULTS = Path(__file__).resolve().parent.parent / "results"


def write_instance(inst, path: Path):
    path.write_text(serialize_instance(inst) + "\n", encoding="utf-8")


def main() -> int:
    RESULTS.mkdir(exist_ok=True)
    runs_csv = RESULTS / "runs.csv"
    if runs_csv.exists():
        runs_csv.unlink()

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # cage family under all three rules
        for cage in ("petersen", "heawood", "mcgee", "tutte_coxeter"):
            inst = gen_girth_lower_bound(cage)
            path = tmp / f"{cage}.json"
            write_instance(inst, path)
            for rule in ("1", "2", "3"):
                argv = ["run", "--instance", str(path), "--rule", rule,
                        "--csv", str(runs_csv)]
                if cage in ("mcgee", "tutte_coxeter"):
                    argv.append("--no-opt")  # above the exact-oracle caps
                cli_main(argv)
            totals = compare_rules(inst)
            print(f"{cage}: totals per rule {dict((k, str(v)) for k, v in totals.items())}")

        # random sweep: ratio vs k
        for seed in range(12):
            k = 1 + seed % 5
            n = 7 + seed % 4
            inst = gen_random_instance(n, n + 3, k, seed)
            path = tmp / f"random{seed}.json"
            write_instance(inst, path)
            cli_main(["run", "--instance", str(path), "--rule", "3",
                      "--csv", str(runs_csv)])

        cli_main(["report", "--runs", str(runs_csv), "--out-dir", str(RESULTS)])

        # canonical certificates end to end
        canon = tmp / "canon.json"
        cli_main(["generate", "canonical", "--classes", "3", "--per-class", "2",
                  "--delta", "300", "--seed", "7", "--out", str(canon)])
        rc1 = cli_main(["certify", "--kind", "balanced", "--instance", str(canon),
                        "--delta", "300", "--alpha", "1",
                        "--out", str(RESULTS / "balanced_certificate.json")])
        rc2 = cli_main(["certify", "--kind", "induction-bound",
                        "--instance", str(canon), "--delta", "300", "--alpha", "1"])
        print(f"balanced certificate: {'pass' if rc1 == 0 else 'fail'}; "
              f"bound audit: {'pass' if rc2 == 0 else 'fail'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

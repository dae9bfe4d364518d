#!/usr/bin/env python3
"""Run the nominal closed-loop scenarios and write trajectory artifacts.

Reproduces the headline suppression results under table parameters: the
reduced-model run with the clipped law, the reduced-model run with the
globally-defined law from a high initial population, the full-model run,
and the uncontrolled baseline.

Usage: python scripts/nominal_study.py [--out OUT_DIR]
"""
import argparse
from pathlib import Path

from sitctl import run_scenario
from sitctl.harness import preset_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/nominal"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name in ("nominal-reduced", "nominal-full", "open-loop"):
        scenario = preset_scenario(name, out_dir=args.out)
        result = run_scenario(scenario)
        print(f"--- {name} ---")
        for line in result.summary_lines():
            print(line)
        print()


if __name__ == "__main__":
    main()

"""Run the built-in replanning scenarios and print their cascade traces.

Optionally writes each trace as JSON lines into --out-dir.
"""

import argparse
from pathlib import Path

from spade.scenarios import FIXTURES
from spade.sim import run_scenario

SHOWN = {"GlobalPlan", "Blocked", "DetourFound", "DetourFailed", "LocalReplan", "LocalReplanFailed",
         "GlobalReplan", "SegmentDone", "Arrived", "Infeasible", "ObstructionSensed"}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=sorted(FIXTURES), help="scenario names")
    ap.add_argument("--seeds", type=int, default=1, help="run seeds 0..N-1")
    ap.add_argument("--out-dir")
    a = ap.parse_args()
    for name in a.names:
        for seed in range(a.seeds):
            tr = run_scenario(FIXTURES[name](seed), record_positions=False)
            print(f"== {name} seed {seed}: {tr.statuses} after {tr.metrics['sim_time_s']} s, "
                  f"{tr.metrics['distance_m']} m, {tr.metrics['mutations']} mutations")
            for e in tr.events:
                if e["event"] in SHOWN:
                    d = e["detail"]
                    extra = d.get("route") or d.get("hop") or d.get("segment") or d.get("blocked_edge") or ""
                    print(f"  {e['t']:8.1f}  {e['event']:18s} {extra}")
            if a.out_dir:
                out = Path(a.out_dir)
                out.mkdir(parents=True, exist_ok=True)
                (out / f"{name}_{seed}.jsonl").write_text(tr.to_jsonl())


if __name__ == "__main__":
    main()

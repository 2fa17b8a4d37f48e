"""Write the built-in scenario fixtures (seed 0) and a generated graph document to scenarios/."""

import argparse
import json
from pathlib import Path

from spade.generate import GeneratorParams, generate_synthetic_lsg
from spade.lsg import save_lsg
from spade.scenarios import FIXTURES


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "scenarios"))
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in FIXTURES.items():
        path = out / f"{name}.json"
        path.write_text(json.dumps(build(a.seed).to_dict(), indent=1) + "\n")
        print(path)
    lsg, _ = generate_synthetic_lsg(GeneratorParams(targets=9, seed=a.seed))
    (out / "generated_lsg.json").write_text(json.dumps(save_lsg(lsg), indent=1) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""End-to-end demo on the bundled two-room scenario.

Runs the scripted scenario through the full pipeline (mock captioning,
extractive summaries), prints the evaluation table, then shows what the
operator-facing queries return from the resulting store.
"""

import json
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from vigil.config import AppConfig
from vigil.datastore import Store
from vigil.evalharness import format_report_table, load_scenario, run_eval
from vigil.query import search, track


def main() -> int:
    scenario = REPO_ROOT / "scenarios" / "two_room.json"
    script = load_scenario(scenario)
    with tempfile.TemporaryDirectory(prefix="vigil-demo-") as workdir:
        print(f"== evaluating {scenario.name}")
        report = run_eval(script, fps=1, config=AppConfig(), workdir=workdir)
        print(format_report_table(report))

        store = Store(Path(workdir) / "store")

        print('\n== search "red shirt"')
        for hit in search(store, "red shirt", limit=5):
            print(
                f"  {hit.score:.2f}  {hit.kind:<15} {hit.camera_id}  "
                f"[{hit.start_ms}-{hit.end_ms}]  {hit.text}"
            )

        print('\n== track "man red shirt"')
        trace = track(store, "man red shirt")
        for camera, start, end, text in trace.hops:
            print(f"  {camera}  [{start}-{end}]  {text}")

        print("\n== store stats")
        stats = store.store_stats()
        print(json.dumps(
            {
                "source_bytes": stats.total.source_bytes,
                "stored_text_bytes": stats.total.caption_bytes + stats.total.summary_bytes,
                "ratio": stats.total.ratio,
            },
            indent=2,
        ))
    return 0


if __name__ == "__main__":
    sys.exit(main())

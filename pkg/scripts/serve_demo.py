#!/usr/bin/env python3
"""Run the agent live with the dashboard gateway on port 8765.

Equivalent to:
    agent run --scenario scenarios/chair.scn --serve 8765 --realtime 20

Then open the dashboard (see frontend/README.md) or poke the port with any
client speaking PROTOCOL.md.
"""

import sys
from pathlib import Path

from deskbot.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    scenario = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "scenarios/chair.scn")
    sys.exit(main(["run", "--scenario", scenario, "--serve", "8765",
                   "--realtime", "20"]))

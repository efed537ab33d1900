#!/usr/bin/env python3
"""Headless demo of the full pipeline on the chair scenario.

Prints the utterance, its parse, the per-tick task activity, and the final
memory contents. No arguments needed; pass a scenario path to use another
world.
"""

import sys
from pathlib import Path

from deskbot import world
from deskbot.agent_core import Agent

ROOT = Path(__file__).resolve().parent.parent


def main():
    scenario = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "scenarios/chair.scn"
    agent = Agent(world.load_scenario(scenario.read_text()))

    print(f"scenario: {scenario}")
    for _ in range(200):
        start = len(agent.trace)
        agent.tick()
        for entry in agent.trace[start:]:
            if entry["phase"] == "controller_step" and entry.get("parsed"):
                print(f"[tick {entry['tick']}] parsed: {entry['parsed'][0]}")
            if entry["phase"] == "controller_step" and entry.get("dialogue"):
                print(f"[tick {entry['tick']}] dialogue step: {entry['dialogue']}"
                      + (f" -> tasks {entry['tasks_pushed']}"
                         if entry.get("tasks_pushed") else ""))
            if entry["phase"] == "task_step" and entry.get("task") is not None:
                if entry["status"] in ("finished", "failed"):
                    print(f"[tick {entry['tick']}] task {entry['task']} "
                          f"({entry['kind']}) {entry['status']}")
        if agent.world.tick > 10 and not len(agent.task_queue) \
                and not len(agent.dialogue_queue):
            break

    pose = agent.world.agent_pose
    print(f"\nfinal pose: ({pose.x:.3f}, {pose.y:.3f}, yaw {pose.yaw:.3f}) "
          f"after {agent.world.tick} ticks")
    print("memory reference objects:")
    for ref in agent.snapshot()["reference_objects"]:
        print(f"  {ref['memid'][:8]}  {ref['class_label']:8s} at "
              f"({ref['position'][0]:.2f}, {ref['position'][1]:.2f})  "
              f"tags={','.join(ref['tags'])}")
    print("chat transcript:")
    for chat in agent.snapshot()["chats"]:
        print(f"  [{chat['tick']:3d}] {chat['speaker']:6s} {chat['text']}")


if __name__ == "__main__":
    main()

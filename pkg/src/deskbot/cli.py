"""Command line interface.

    agent run --scenario FILE [--ticks N] [--chat-script FILE] [--trace OUT]
              [--serve PORT] [--config FILE] [--realtime HZ]
              [--dump-memory PATH] [--inject-faults MODULES]
    agent parse "utterance"
    agent query FILTERS --snapshot FILE
"""

from __future__ import annotations

import argparse
import json
import math
import shlex
import sys
import time

from . import dsl, world
from .agent_core import Agent, AgentConfig, ChatMsg, trace_line
from .memory import MemoryStore
from .nlparser import Parser


class InjectedFault(RuntimeError):
    pass


def inject_faults(agent: Agent, modules: set[str]):
    """Replace subsystem entry points with stubs that error on every call."""
    def raiser(name):
        def stub(*args, **kwargs):
            raise InjectedFault(f"injected {name} fault")
        return stub

    if "perception" in modules:
        agent.perceive_fast = raiser("perception")
        agent.perceive_slow = raiser("perception")
    if "interpreter" in modules:
        agent.dialogue_queue.step_one = raiser("interpreter")
    unknown = modules - {"perception", "interpreter"}
    if unknown:
        raise ValueError(f"unknown fault module {sorted(unknown)[0]!r}")


def _load_chat_script(text: str) -> list[tuple[int, str]]:
    """Chat script lines: tick N chat "..." (same grammar as scenario events)."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = shlex.split(line)
        if len(parts) != 4 or parts[0] != "tick" or parts[2] != "chat":
            raise ValueError(f"chat script line {lineno}: expected: tick N chat \"...\"")
        out.append((int(parts[1]), parts[3]))
    return sorted(out, key=lambda p: p[0])


def cmd_run(args) -> int:
    config = AgentConfig()
    if args.config:
        with open(args.config) as f:
            config = AgentConfig.from_text(f.read())
    if args.realtime and args.realtime > 20:
        # state frames are capped at 20 Hz regardless of loop rate
        config.frame_every = max(config.frame_every, math.ceil(args.realtime / 20))
    with open(args.scenario) as f:
        try:
            state = world.load_scenario(f.read())
        except world.ScenarioError as e:
            print(f"scenario error: {e}", file=sys.stderr)
            return 2

    agent = Agent(state, config)
    if args.inject_faults:
        inject_faults(agent, set(args.inject_faults.split(",")))

    script = []
    if args.chat_script:
        with open(args.chat_script) as f:
            script = _load_chat_script(f.read())

    gateway = None
    if args.serve is not None:
        from .gateway import Gateway

        gateway = Gateway(agent, port=args.serve)
        gateway.start()
        print(f"serving dashboard gateway on port {gateway.port}", flush=True)

    trace_out = open(args.trace, "w") if args.trace else None
    period = 1.0 / args.realtime if args.realtime else 0.0
    script_index = 0
    try:
        tick = 0
        while args.ticks is None or tick < args.ticks:
            while script_index < len(script) and script[script_index][0] <= agent.world.tick:
                agent.inbox.put(ChatMsg(speaker="human", text=script[script_index][1]))
                script_index += 1
            started = time.monotonic()
            agent.tick()
            if trace_out is not None:
                for entry in agent.trace[-4:]:
                    trace_out.write(trace_line(entry) + "\n")
            if period:
                time.sleep(max(0.0, period - (time.monotonic() - started)))
            tick += 1
    except KeyboardInterrupt:
        pass
    finally:
        if trace_out is not None:
            trace_out.close()
        if gateway is not None:
            gateway.stop()
    if args.dump_memory:
        with open(args.dump_memory, "w") as f:
            f.write(agent.memory.dump())
    print(f"ran {agent.world.tick} ticks; {len(agent.memory)} memory nodes", flush=True)
    return 0


def cmd_parse(args) -> int:
    result = Parser().parse(args.utterance)
    print(dsl.to_canonical(result.lf))
    return 0


def cmd_query(args) -> int:
    with open(args.snapshot) as f:
        store = MemoryStore.load(f.read())
    try:
        filters = dsl.filters_from_obj(json.loads(args.filters))
    except (json.JSONDecodeError, dsl.CanonicalParseError) as e:
        print(f"bad filters: {e}", file=sys.stderr)
        return 2
    for memid in store.query(filters, tick=0):
        print(memid)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="agent",
                                     description="desk-scale embodied agent")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the agent loop on a scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--ticks", type=int, default=None)
    p_run.add_argument("--chat-script")
    p_run.add_argument("--trace", help="write a JSONL trace dump here")
    p_run.add_argument("--serve", type=int, default=None, metavar="PORT")
    p_run.add_argument("--config")
    p_run.add_argument("--realtime", type=float, default=None, metavar="HZ")
    p_run.add_argument("--dump-memory", metavar="PATH")
    p_run.add_argument("--inject-faults", metavar="MODULES",
                       help="comma-separated: perception,interpreter (testing aid)")
    p_run.set_defaults(func=cmd_run)

    p_parse = sub.add_parser("parse", help="parse an utterance to canonical LF")
    p_parse.add_argument("utterance")
    p_parse.set_defaults(func=cmd_parse)

    p_query = sub.add_parser("query", help="run a FILTERS query on a memory snapshot")
    p_query.add_argument("filters", help="filters document, e.g. '{\"has_tag\":\"chair\"}'")
    p_query.add_argument("--snapshot", required=True)
    p_query.set_defaults(func=cmd_query)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

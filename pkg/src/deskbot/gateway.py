"""Network boundary for operator consoles.

Speaks a length-prefixed message-stream protocol over TCP: every message is
a 4-byte big-endian payload length followed by that many bytes of compact
JSON with sorted keys (the same document syntax as canonical logical forms).
Full catalog in PROTOCOL.md.

The gateway holds no authoritative agent state: operator messages are routed
into the agent's inbox and answered with ack/error; state flows back as
snapshot frames published by the loop, fanned out through bounded per-client
buffers that drop the oldest frame rather than ever blocking the loop.
"""

from __future__ import annotations

import json
import socket
import socketserver
import struct
import threading
from collections import deque

from .agent_core import Agent, AnnotationMsg, ChatMsg, PauseMsg, ResumeMsg, TeleopMsg

HEADER = struct.Struct(">I")
MAX_MESSAGE = 1 << 20
FRAME_BUFFER = 16

TELEOP_ACTIONS = ("forward", "back", "left", "right")


def encode_message(obj: dict) -> bytes:
    payload = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode()
    if len(payload) > MAX_MESSAGE:
        raise ValueError("message too large")
    return HEADER.pack(len(payload)) + payload


def read_exactly(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def read_message(sock: socket.socket) -> dict:
    """One framed message; ValueError for oversized or non-document payloads."""
    (length,) = HEADER.unpack(read_exactly(sock, HEADER.size))
    if length > MAX_MESSAGE:
        raise ValueError(f"declared length {length} exceeds maximum")
    payload = read_exactly(sock, length)
    try:
        obj = json.loads(payload.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"bad message document: {e}") from e
    if not isinstance(obj, dict):
        raise ValueError("message must be a document")
    return obj


def validate_client_message(msg: dict) -> str | None:
    """Returns a reason string for bad messages, None when acceptable."""
    mtype = msg.get("type")
    if mtype not in ("chat", "teleop", "tag_object", "pause", "resume", "subscribe"):
        return f"unknown message type {mtype!r}"
    seq = msg.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool):
        return "seq must be an integer"
    if mtype == "chat":
        if not isinstance(msg.get("text"), str):
            return "chat needs a text string"
        if "speaker" in msg and not isinstance(msg["speaker"], str):
            return "speaker must be a string"
    elif mtype == "teleop":
        if msg.get("action") not in TELEOP_ACTIONS:
            return f"teleop action must be one of {', '.join(TELEOP_ACTIONS)}"
    elif mtype == "tag_object":
        if not isinstance(msg.get("memid"), str) or not isinstance(msg.get("tag"), str):
            return "tag_object needs memid and tag strings"
        if not msg["tag"]:
            return "tag must be non-empty"
    elif mtype == "subscribe":
        every = msg.get("every", 1)
        if not isinstance(every, int) or isinstance(every, bool) or every < 1:
            return "every must be an integer >= 1"
    return None


class _ClientState:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.write_lock = threading.Lock()
        self.frames: deque = deque(maxlen=FRAME_BUFFER)
        self.frames_ready = threading.Event()
        self.subscribed = False
        self.every = 1
        self.last_sent_tick = -1
        self.closed = False

    def send(self, obj: dict):
        data = encode_message(obj)
        with self.write_lock:
            self.sock.sendall(data)

    def offer_frame(self, frame: dict):
        """Called from the agent loop thread; never blocks (drop-oldest)."""
        if self.subscribed and not self.closed and frame["tick"] % self.every == 0:
            self.frames.append(frame)
            self.frames_ready.set()


class Gateway:
    """TCP server bridging operator clients and one agent's message channels."""

    def __init__(self, agent: Agent, host: str = "127.0.0.1", port: int = 0):
        self.agent = agent
        self._clients: list[_ClientState] = []
        self._clients_lock = threading.Lock()
        self._latest_frame: dict | None = None
        self._frame_lock = threading.Lock()

        gw = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                gw._handle_connection(self.request)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._thread: threading.Thread | None = None
        agent.frame_listeners.append(self.publish)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self):
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="gateway", daemon=True)
        self._thread.start()

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.closed = True
            client.frames_ready.set()
            try:
                client.sock.close()
            except OSError:
                pass
        if self._thread is not None:
            self._thread.join(timeout=5)

    def publish(self, frame: dict):
        """Fan a state frame out to subscribers; never blocks the loop."""
        with self._frame_lock:
            self._latest_frame = frame
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.offer_frame(frame)

    def latest_frame(self) -> dict | None:
        with self._frame_lock:
            return self._latest_frame

    # -- connection handling -------------------------------------------------

    def _handle_connection(self, sock: socket.socket):
        client = _ClientState(sock)
        with self._clients_lock:
            self._clients.append(client)
        sender = threading.Thread(target=self._send_frames, args=(client,), daemon=True)
        sender.start()
        try:
            while not client.closed:
                try:
                    msg = read_message(sock)
                except ValueError as e:
                    client.send({"type": "error", "seq": None, "reason": str(e)})
                    continue
                self._handle_message(client, msg)
        except (ConnectionError, OSError):
            pass
        finally:
            client.closed = True
            client.frames_ready.set()
            with self._clients_lock:
                if client in self._clients:
                    self._clients.remove(client)

    def _handle_message(self, client: _ClientState, msg: dict):
        reason = validate_client_message(msg)
        seq = msg.get("seq") if isinstance(msg.get("seq"), int) else None
        if reason is not None:
            client.send({"type": "error", "seq": seq, "reason": reason})
            return

        mtype = msg["type"]
        if mtype == "chat":
            self.agent.inbox.put(ChatMsg(speaker=msg.get("speaker", "human"),
                                         text=msg["text"]))
        elif mtype == "teleop":
            self.agent.inbox.put(TeleopMsg(action=msg["action"]))
        elif mtype == "tag_object":
            frame = self.latest_frame()
            known = {r["memid"] for r in (frame or {}).get("reference_objects", [])}
            if msg["memid"] not in known:
                client.send({"type": "error", "seq": seq,
                             "reason": f"unknown memid {msg['memid']}"})
                return
            self.agent.inbox.put(AnnotationMsg(memid=msg["memid"], tag=msg["tag"]))
        elif mtype == "pause":
            self.agent.inbox.put(PauseMsg())
        elif mtype == "resume":
            self.agent.inbox.put(ResumeMsg())
        elif mtype == "subscribe":
            client.every = msg.get("every", 1)
            client.subscribed = True
            frame = self.latest_frame()
            if frame is not None:
                client.frames.append(frame)
                client.frames_ready.set()
        client.send({"type": "ack", "seq": seq})

    def _send_frames(self, client: _ClientState):
        while not client.closed:
            client.frames_ready.wait()
            client.frames_ready.clear()
            while True:
                try:
                    frame = client.frames.popleft()
                except IndexError:
                    break
                if frame["tick"] <= client.last_sent_tick:
                    continue
                try:
                    client.send({"type": "state", "tick": frame["tick"], "frame": frame})
                    client.last_sent_tick = frame["tick"]
                except (OSError, ValueError):
                    client.closed = True
                    return


class GatewayClient:
    """Minimal blocking client, used by tests and scripts."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self._seq = 0

    def close(self):
        self.sock.close()

    def send(self, msg: dict) -> int:
        """Assigns the next seq, sends, returns the seq used."""
        msg = dict(msg)
        msg.setdefault("seq", self._seq)
        self._seq = msg["seq"] + 1
        self.sock.sendall(encode_message(msg))
        return msg["seq"]

    def send_raw(self, data: bytes):
        self.sock.sendall(data)

    def recv(self) -> dict:
        return read_message(self.sock)

    def recv_until(self, mtype: str, limit: int = 50) -> dict:
        for _ in range(limit):
            msg = self.recv()
            if msg.get("type") == mtype:
                return msg
        raise TimeoutError(f"no {mtype} message within {limit} messages")

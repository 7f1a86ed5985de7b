"""Frame-stream protocol server.

Clients send tool poses and pedal presses; the server answers with render
frames and trial bookkeeping. Messages are single JSON objects carrying a
version field, transported either as newline-delimited UTF-8 lines over a
plain socket or as one-message-per-text-frame WebSocket traffic. The
transport is sniffed from the first bytes of the connection, so both kinds
of client share one port.

Outbound traffic never queues unboundedly: render frames are conflated
per session (latest wins) while bookkeeping messages are delivered
reliably and in order. See PROTOCOL.md for the message grammar.
"""
from __future__ import annotations

import base64
import dataclasses
import hashlib
import json
import math
import random
import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass, field

from .agent import DEFAULT_START
from .geometry import Pose, UnitQuat, Vec3, compute_error
from .harness import ExperimentConfig, draw_target
from .records import TrialRecord, records_to_csv
from .seeds import stream_seed
from .widget import Condition, WidgetConfig, build_frame, canonical_json, frame_to_obj

PROTOCOL_VERSION = 1
MAX_MESSAGE_BYTES = 1 << 20

# WidgetConfig fields a StartSession may override
_WIDGET_OVERRIDE_FIELDS = frozenset(
    f.name for f in dataclasses.fields(WidgetConfig) if f.name != "duo_colors")

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class ProtocolError(Exception):
    """A client message the server must reject.

    fatal errors close the connection after the error message is sent;
    the rest leave every session intact.
    """

    def __init__(self, code: str, detail: str, *, fatal: bool = False):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.fatal = fatal


def _require(obj: dict, key: str):
    if key not in obj:
        raise ProtocolError("bad-message", f"missing field {key!r}")
    return obj[key]


def _number(obj: dict, key: str) -> float:
    v = _require(obj, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ProtocolError("bad-message", f"field {key!r} must be a finite number")
    return float(v)


def _parse_pose(obj) -> Pose:
    if not isinstance(obj, dict):
        raise ProtocolError("bad-message", "tool pose must be an object")
    pos = obj.get("position")
    ori = obj.get("orientation")
    if (not isinstance(pos, list) or len(pos) != 3
            or not isinstance(ori, list) or len(ori) != 4):
        raise ProtocolError(
            "bad-message", "tool pose needs position[3] and orientation[4]")
    vals = pos + ori
    if any(isinstance(v, bool) or not isinstance(v, (int, float))
           or not math.isfinite(v) for v in vals):
        raise ProtocolError("bad-message", "pose components must be finite numbers")
    w, x, y, z = (float(v) for v in ori)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n < 1e-9:
        raise ProtocolError("bad-message", "orientation quaternion has zero norm")
    # clients may send slightly drifted quaternions; renormalize here
    quat = UnitQuat.of(w / n, x / n, y / n, z / n)
    return Pose(Vec3(float(pos[0]), float(pos[1]), float(pos[2])), quat)


def _widget_config(overrides) -> WidgetConfig:
    if overrides is None:
        return WidgetConfig()
    if not isinstance(overrides, dict):
        raise ProtocolError("bad-message", "widget overrides must be an object")
    clean = {}
    for key, val in overrides.items():
        if key not in _WIDGET_OVERRIDE_FIELDS:
            raise ProtocolError("bad-message", f"unknown widget field {key!r}")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ProtocolError("bad-message", f"widget field {key!r} must be a number")
        clean[key] = float(val)
    cfg = dataclasses.replace(WidgetConfig(), **clean)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ProtocolError("bad-message", f"widget overrides invalid: {exc}")
    return cfg


@dataclass
class Session:
    """One trial sequence: a condition, its pre-drawn targets, and the
    latest tool pose. Message handling per session is strictly ordered."""

    session_id: str
    condition: Condition
    widget: WidgetConfig
    subject_id: int
    targets: list[Pose]
    trial_seeds: list[int]
    trial_index: int = 0
    tool: Pose = DEFAULT_START
    last_seq: int | None = None
    last_t: float | None = None  # latest t_client (ms), monotonicity gate
    trial_start_t: float | None = None  # t_client when this trial first heard
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.trial_index >= len(self.targets)

    def target(self) -> Pose:
        return self.targets[self.trial_index]


def new_session(session_id: str, config: ExperimentConfig, condition: Condition,
                widget: WidgetConfig, subject_id: int, seed: int) -> Session:
    """Pre-draw the session's targets from the same named streams the
    simulator uses, so seed+subject+condition fixes the target sequence."""
    targets, seeds = [], []
    for t in range(config.trials_per_condition):
        trial_seed = stream_seed(seed, f"s{subject_id}|{condition.value}|t{t}")
        rng = random.Random(trial_seed)
        targets.append(draw_target(rng, config))
        seeds.append(trial_seed)
    return Session(session_id, condition, widget, subject_id, targets, seeds)


def _pose_fields(pose: Pose) -> dict:
    return {
        "position": [pose.position.x, pose.position.y, pose.position.z],
        "orientation": [pose.orientation.w, pose.orientation.x,
                        pose.orientation.y, pose.orientation.z],
    }


def _record_obj(r: TrialRecord) -> dict:
    e = r.error
    return {
        "subject": r.subject_id,
        "condition": r.condition.value,
        "trial": r.trial_index,
        "target": [r.target.position.x, r.target.position.y, r.target.position.z],
        "time": r.task_time,
        "pm": e.pm, "px": e.pe_vec.x, "py": e.pe_vec.y, "pz": e.pe_vec.z,
        "rm": e.rm, "rx": e.re_x, "rz": e.re_z,
        "timed_out": r.timed_out,
        "seed": r.seed,
    }


def frame_message(session: Session) -> str:
    error = compute_error(session.tool, session.target())
    frame = build_frame(session.condition, session.tool, session.target(),
                        error, session.widget)
    return canonical_json({
        "v": PROTOCOL_VERSION,
        "type": "frame",
        "session": session.session_id,
        "seq": session.last_seq,
        "render": frame_to_obj(frame),
        "error_summary": {
            "pm": error.pm, "px": error.pe_vec.x, "py": error.pe_vec.y,
            "pz": error.pe_vec.z, "rm": error.rm, "rx": error.re_x,
            "rz": error.re_z,
        },
    })


def trial_advance_message(session: Session, elapsed: float | None) -> str:
    return canonical_json({
        "v": PROTOCOL_VERSION,
        "type": "trial_advance",
        "session": session.session_id,
        "condition": session.condition.value,
        "trial_index": session.trial_index,
        "trials_total": len(session.targets),
        "target": _pose_fields(session.target()),
        "elapsed": elapsed,
    })


def session_summary_message(session: Session) -> str:
    return canonical_json({
        "v": PROTOCOL_VERSION,
        "type": "session_summary",
        "session": session.session_id,
        "records": [_record_obj(r) for r in session.records],
        "csv": records_to_csv(session.records),
    })


def error_message(code: str, detail: str, session_id: str | None = None) -> str:
    return canonical_json({
        "v": PROTOCOL_VERSION,
        "type": "error",
        "session": session_id,
        "code": code,
        "detail": detail,
    })


class Outbox:
    """Per-connection send buffer: events are reliable and ordered, frames
    are conflated per session so a slow client only costs one stale frame."""

    def __init__(self):
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self._events: deque[str] = deque()
        self._frames: dict[str, str] = {}
        self._closed = False

    def put_event(self, text: str) -> None:
        with self._ready:
            self._events.append(text)
            self._ready.notify()

    def put_frame(self, session_id: str, text: str) -> None:
        with self._ready:
            self._frames[session_id] = text
            self._ready.notify()

    def drop_frame(self, session_id: str) -> None:
        """Forget a pending frame; used when a trial ends so a stale frame
        for the finished target cannot follow its trial_advance out."""
        with self._ready:
            self._frames.pop(session_id, None)

    def close(self) -> None:
        with self._ready:
            self._closed = True
            self._ready.notify()

    def drain(self) -> list[str] | None:
        """Block until something is sendable; None once closed and empty."""
        with self._ready:
            while not self._events and not self._frames:
                if self._closed:
                    return None
                self._ready.wait()
            batch = list(self._events)
            self._events.clear()
            batch.extend(self._frames.values())
            self._frames.clear()
            return batch


class _SockReader:
    """Buffered byte reader over a socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buf = b""

    def _fill(self) -> bool:
        try:
            chunk = self._sock.recv(65536)
        except OSError:
            return False
        if not chunk:
            return False
        self._buf += chunk
        return True

    def peek_byte(self) -> bytes:
        while not self._buf:
            if not self._fill():
                return b""
        return self._buf[:1]

    def read_until(self, delim: bytes, limit: int) -> bytes | None:
        while delim not in self._buf:
            if len(self._buf) > limit or not self._fill():
                return None
        idx = self._buf.index(delim) + len(delim)
        out, self._buf = self._buf[:idx], self._buf[idx:]
        return out

    def read_exact(self, n: int) -> bytes | None:
        while len(self._buf) < n:
            if not self._fill():
                return None
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


class LineTransport:
    """Newline-delimited JSON over a plain socket."""

    def __init__(self, sock: socket.socket, reader: _SockReader):
        self._sock = sock
        self._reader = reader
        self._wlock = threading.Lock()

    def recv_message(self) -> str | None:
        while True:
            line = self._reader.read_until(b"\n", MAX_MESSAGE_BYTES)
            if line is None:
                return None
            text = line.strip()
            if text:
                return text.decode("utf-8", errors="replace")

    def send_message(self, text: str) -> bool:
        with self._wlock:
            try:
                self._sock.sendall(text.encode("utf-8") + b"\n")
                return True
            except OSError:
                return False

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def websocket_accept(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


class WebSocketTransport:
    """Server side of RFC 6455 with one JSON message per text frame.

    Supports unfragmented text, ping/pong, and close; fragmented messages
    are refused with a close frame.
    """

    def __init__(self, sock: socket.socket, reader: _SockReader):
        self._sock = sock
        self._reader = reader
        self._wlock = threading.Lock()

    def handshake(self) -> bool:
        head = self._reader.read_until(b"\r\n\r\n", 16384)
        if head is None:
            return False
        lines = head.decode("latin-1").split("\r\n")
        request = lines[0].split(" ")
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                name, _, value = line.partition(":")
                headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if (len(request) < 3 or request[0] != "GET"
                or "websocket" not in headers.get("upgrade", "").lower()
                or key is None):
            self._raw_send(b"HTTP/1.1 400 Bad Request\r\n"
                           b"Connection: close\r\n\r\n")
            return False
        accept = websocket_accept(key)
        return self._raw_send(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n")

    def recv_message(self) -> str | None:
        while True:
            head = self._reader.read_exact(2)
            if head is None:
                return None
            fin = head[0] & 0x80
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                ext = self._reader.read_exact(2)
                if ext is None:
                    return None
                length = struct.unpack(">H", ext)[0]
            elif length == 127:
                ext = self._reader.read_exact(8)
                if ext is None:
                    return None
                length = struct.unpack(">Q", ext)[0]
            if length > MAX_MESSAGE_BYTES:
                self._send_close(1009)
                return None
            mask = b""
            if masked:
                mask = self._reader.read_exact(4) or b""
                if len(mask) < 4:
                    return None
            payload = self._reader.read_exact(length)
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x9:  # ping
                self._send_frame(0xA, payload)
                continue
            if opcode == 0xA:  # pong
                continue
            if opcode == 0x8:  # close
                self._send_close(1000)
                return None
            if opcode != 0x1 or not fin or not masked:
                # binary frames, fragmentation, and unmasked client frames
                # are outside this server's grammar
                self._send_close(1002)
                return None
            return payload.decode("utf-8", errors="replace")

    def send_message(self, text: str) -> bool:
        return self._send_frame(0x1, text.encode("utf-8"))

    def _send_frame(self, opcode: int, payload: bytes) -> bool:
        n = len(payload)
        if n < 126:
            head = bytes((0x80 | opcode, n))
        elif n < 1 << 16:
            head = bytes((0x80 | opcode, 126)) + struct.pack(">H", n)
        else:
            head = bytes((0x80 | opcode, 127)) + struct.pack(">Q", n)
        return self._raw_send(head + payload)

    def _send_close(self, status: int) -> None:
        self._send_frame(0x8, struct.pack(">H", status))

    def _raw_send(self, data: bytes) -> bool:
        with self._wlock:
            try:
                self._sock.sendall(data)
                return True
            except OSError:
                return False

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class _Connection:
    """One client socket: a reader loop handling messages in arrival order
    and a writer thread draining the conflating outbox."""

    def __init__(self, server: "GuidanceServer", sock: socket.socket):
        self._server = server
        self._sock = sock
        self._outbox = Outbox()
        self._sessions: dict[str, Session] = {}
        self._next_session = 1
        self._transport = None

    def run(self) -> None:
        try:
            reader = _SockReader(self._sock)
            first = reader.peek_byte()
            if first == b"G":
                transport = WebSocketTransport(self._sock, reader)
                if not transport.handshake():
                    return
            elif first:
                transport = LineTransport(self._sock, reader)
            else:
                return
            self._transport = transport
            writer = threading.Thread(target=self._write_loop, daemon=True)
            writer.start()
            try:
                self._read_loop(transport)
            finally:
                self._outbox.close()
                writer.join(timeout=5.0)
        finally:
            self._close_sock()
            self._server._forget(self)

    def _write_loop(self) -> None:
        while True:
            batch = self._outbox.drain()
            if batch is None:
                return
            for text in batch:
                if not self._transport.send_message(text):
                    return

    def _read_loop(self, transport) -> None:
        while True:
            text = transport.recv_message()
            if text is None:
                return
            try:
                self._handle(text)
            except ProtocolError as exc:
                session_id = None
                try:
                    session_id = json.loads(text).get("session")
                except (ValueError, AttributeError):
                    pass
                if not isinstance(session_id, str):
                    session_id = None
                self._outbox.put_event(
                    error_message(exc.code, exc.detail, session_id))
                if exc.fatal:
                    # give the writer a moment to flush, then drop the link
                    self._outbox.close()
                    return

    def _handle(self, text: str) -> None:
        try:
            msg = json.loads(text)
        except ValueError:
            raise ProtocolError("bad-json", "message is not valid JSON")
        if not isinstance(msg, dict):
            raise ProtocolError("bad-json", "message must be a JSON object")
        version = msg.get("v")
        if version != PROTOCOL_VERSION:
            raise ProtocolError(
                "version-mismatch",
                f"this server speaks v{PROTOCOL_VERSION}, got {version!r}",
                fatal=True)
        mtype = msg.get("type")
        if mtype == "start_session":
            self._on_start(msg)
        elif mtype == "pose_update":
            self._on_pose(msg)
        elif mtype == "pedal":
            self._on_pedal(msg)
        elif mtype == "end_session":
            self._on_end(msg)
        else:
            raise ProtocolError("bad-message", f"unknown message type {mtype!r}")

    def _session_for(self, msg: dict) -> Session:
        sid = _require(msg, "session")
        session = self._sessions.get(sid) if isinstance(sid, str) else None
        if session is None:
            raise ProtocolError("unknown-session", f"no session {sid!r}")
        return session

    def _monotone_t(self, session: Session, msg: dict) -> float:
        t = _number(msg, "t_client")
        if session.last_t is not None and t < session.last_t:
            raise ProtocolError(
                "bad-message",
                f"t_client must be monotone per session "
                f"({t} after {session.last_t})")
        session.last_t = t
        if session.trial_start_t is None:
            session.trial_start_t = t
        return t

    def _on_start(self, msg: dict) -> None:
        condition_name = _require(msg, "condition")
        if not isinstance(condition_name, str):
            raise ProtocolError("bad-message", "condition must be a string")
        try:
            condition = Condition.parse(condition_name)
        except ValueError as exc:
            raise ProtocolError("bad-message", str(exc))
        widget = _widget_config(msg.get("widget"))
        seed = msg.get("seed", self._server.config.seed)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ProtocolError("bad-message", "seed must be an integer")
        subject = msg.get("subject", 0)
        if isinstance(subject, bool) or not isinstance(subject, int) or subject < 0:
            raise ProtocolError("bad-message", "subject must be a non-negative integer")
        sid = f"s{self._next_session}"
        self._next_session += 1
        session = new_session(sid, self._server.config, condition, widget,
                              subject, seed)
        self._sessions[sid] = session
        self._outbox.put_event(trial_advance_message(session, None))
        self._outbox.put_frame(sid, frame_message(session))

    def _on_pose(self, msg: dict) -> None:
        session = self._session_for(msg)
        seq = _require(msg, "seq")
        if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
            raise ProtocolError("bad-message", "seq must be a non-negative integer")
        self._monotone_t(session, msg)
        session.tool = _parse_pose(_require(msg, "tool"))
        session.last_seq = seq
        self._outbox.put_frame(session.session_id, frame_message(session))

    def _on_pedal(self, msg: dict) -> None:
        session = self._session_for(msg)
        t = self._monotone_t(session, msg)
        elapsed = (t - session.trial_start_t) / 1000.0
        error = compute_error(session.tool, session.target())
        record = TrialRecord(
            subject_id=session.subject_id,
            condition=session.condition,
            trial_index=session.trial_index,
            target=session.target(),
            task_time=elapsed,
            error=error,
            timed_out=False,
            seed=session.trial_seeds[session.trial_index],
        )
        record.validate()
        session.records.append(record)
        session.trial_index += 1
        session.trial_start_t = None
        # a stale frame for the finished target must not outlive its trial
        self._outbox.drop_frame(session.session_id)
        if session.done:
            self._outbox.put_event(session_summary_message(session))
            del self._sessions[session.session_id]
        else:
            self._outbox.put_event(trial_advance_message(session, elapsed))
            self._outbox.put_frame(session.session_id, frame_message(session))

    def _on_end(self, msg: dict) -> None:
        session = self._session_for(msg)
        self._outbox.drop_frame(session.session_id)
        self._outbox.put_event(session_summary_message(session))
        del self._sessions[session.session_id]

    def _close_sock(self) -> None:
        transport = self._transport
        if transport is not None:
            transport.close()
            return
        try:
            self._sock.close()
        except OSError:
            pass


class GuidanceServer:
    """Accept loop owning one `_Connection` per client.

    Usage: `with GuidanceServer(config, host, port) as server:
    server.serve_forever()`. Binding happens on enter; port 0 picks an
    ephemeral port, readable from `server.port` afterward.
    """

    def __init__(self, config: ExperimentConfig, *, host: str = "127.0.0.1",
                 port: int = 8765):
        config.validate()
        self.config = config
        self.host = host
        self.port = port
        self._listener: socket.socket | None = None
        self._closed = False
        self._lock = threading.Lock()
        self._connections: set[_Connection] = set()

    def __enter__(self) -> "GuidanceServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(16)
        self.host, self.port = listener.getsockname()[:2]
        self._listener = listener
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def serve_forever(self) -> None:
        if self._listener is None:
            raise RuntimeError("server is not bound; use it as a context manager")
        while True:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return  # listener closed by shutdown()
            conn = _Connection(self, sock)
            with self._lock:
                if self._closed:
                    sock.close()
                    return
                self._connections.add(conn)
            threading.Thread(target=conn.run, daemon=True).start()

    def shutdown(self) -> None:
        with self._lock:
            self._closed = True
            conns = list(self._connections)
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        for conn in conns:
            conn._close_sock()

    def _forget(self, conn: _Connection) -> None:
        with self._lock:
            self._connections.discard(conn)

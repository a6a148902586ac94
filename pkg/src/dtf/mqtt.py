"""Minimal MQTT 3.1.1 over TCP: enough broker and client for QoS 0 telemetry.

Implements CONNECT/CONNACK, PUBLISH (QoS 0), SUBSCRIBE/SUBACK, PINGREQ/
PINGRESP and DISCONNECT, with `+`/`#` topic filters. Not a full broker:
no sessions, no retained messages, no QoS 1/2, no auth. The point is that
`dtf replay` and `dtf serve` can be separate OS processes speaking the
real wire protocol, and that any standard client can publish into the
pipeline.
"""

from __future__ import annotations

import socket
import struct
import threading

from .bus import Message, MessageBus
from .errors import ConnectionLost

CONNECT, CONNACK, PUBLISH, SUBSCRIBE, SUBACK = 1, 2, 3, 8, 9
PINGREQ, PINGRESP, DISCONNECT = 12, 13, 14


# -- frame encoding --------------------------------------------------------

def _encode_string(s: str) -> bytes:
    data = s.encode("utf-8")
    return struct.pack(">H", len(data)) + data


def _encode_length(n: int) -> bytes:
    # variable-length remaining-length field, 7 bits per byte
    out = bytearray()
    while True:
        byte = n % 128
        n //= 128
        if n > 0:
            byte |= 0x80
        out.append(byte)
        if n == 0:
            return bytes(out)


def _frame(ptype: int, flags: int, body: bytes) -> bytes:
    return bytes([(ptype << 4) | flags]) + _encode_length(len(body)) + body


def encode_connect(client_id: str, keepalive: int = 60) -> bytes:
    body = _encode_string("MQTT") + bytes([4, 0x02]) + struct.pack(">H", keepalive)
    body += _encode_string(client_id)
    return _frame(CONNECT, 0, body)


def encode_connack(session_present: bool = False, code: int = 0) -> bytes:
    return _frame(CONNACK, 0, bytes([1 if session_present else 0, code]))


def encode_publish(topic: str, payload: bytes) -> bytes:
    return _frame(PUBLISH, 0, _encode_string(topic) + payload)


def encode_subscribe(packet_id: int, filters: list[str]) -> bytes:
    body = struct.pack(">H", packet_id)
    for f in filters:
        body += _encode_string(f) + b"\x00"  # requested QoS 0
    return _frame(SUBSCRIBE, 0x02, body)


def encode_suback(packet_id: int, count: int) -> bytes:
    return _frame(SUBACK, 0, struct.pack(">H", packet_id) + b"\x00" * count)


def encode_pingreq() -> bytes:
    return _frame(PINGREQ, 0, b"")


def encode_pingresp() -> bytes:
    return _frame(PINGRESP, 0, b"")


def encode_disconnect() -> bytes:
    return _frame(DISCONNECT, 0, b"")


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionLost("peer closed")
        buf += chunk
    return buf


def read_packet(sock: socket.socket) -> tuple[int, int, bytes]:
    """Blocking read of one packet; returns (type, flags, body)."""
    first = _recv_exact(sock, 1)[0]
    length, shift = 0, 0
    while True:
        byte = _recv_exact(sock, 1)[0]
        length |= (byte & 0x7F) << shift
        if not byte & 0x80:
            break
        shift += 7
        if shift > 21:
            raise ConnectionLost("malformed remaining length")
    body = _recv_exact(sock, length) if length else b""
    return first >> 4, first & 0x0F, body


def decode_publish(body: bytes) -> tuple[str, bytes]:
    tlen = struct.unpack(">H", body[:2])[0]
    return body[2 : 2 + tlen].decode("utf-8"), body[2 + tlen :]


def _decode_strings(body: bytes, offset: int) -> list[str]:
    """Parse (string, qos-byte) pairs of a SUBSCRIBE payload."""
    out = []
    while offset < len(body):
        slen = struct.unpack(">H", body[offset : offset + 2])[0]
        out.append(body[offset + 2 : offset + 2 + slen].decode("utf-8"))
        offset += 2 + slen + 1
    return out


# -- broker ----------------------------------------------------------------

class MiniBroker:
    """Threaded QoS 0 broker backed by the in-process MessageBus.

    Every network subscription becomes a bus subscription, so in-process
    code can publish/subscribe on `broker.bus` and interoperate with TCP
    clients transparently.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.bus = MessageBus()
        self._server = socket.create_server((host, port))
        self.host, self.port = self._server.getsockname()[:2]
        self._threads: list[threading.Thread] = []
        self._closing = False
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> "MiniBroker":
        self._accept_thread.start()
        return self

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve_client, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve_client(self, conn: socket.socket) -> None:
        write_lock = threading.Lock()
        forwarders: list[threading.Thread] = []
        subs = []
        try:
            ptype, _, _ = read_packet(conn)
            if ptype != CONNECT:
                return
            conn.sendall(encode_connack())
            while True:
                ptype, _, body = read_packet(conn)
                if ptype == PUBLISH:
                    topic, payload = decode_publish(body)
                    self.bus.publish(topic, payload)
                elif ptype == SUBSCRIBE:
                    packet_id = struct.unpack(">H", body[:2])[0]
                    filters = _decode_strings(body, 2)
                    for f in filters:
                        sub = self.bus.subscribe(f)
                        subs.append(sub)
                        t = threading.Thread(
                            target=self._forward, args=(sub, conn, write_lock), daemon=True
                        )
                        t.start()
                        forwarders.append(t)
                    with write_lock:
                        conn.sendall(encode_suback(packet_id, len(filters)))
                elif ptype == PINGREQ:
                    with write_lock:
                        conn.sendall(encode_pingresp())
                elif ptype == DISCONNECT:
                    return
        except (ConnectionLost, OSError):
            return
        finally:
            for sub in subs:
                self.bus.unsubscribe(sub)
            conn.close()

    def _forward(self, sub, conn: socket.socket, write_lock: threading.Lock) -> None:
        for msg in sub:
            try:
                with write_lock:
                    conn.sendall(encode_publish(msg.topic, msg.payload))
            except OSError:
                return

    def close(self) -> None:
        self._closing = True
        self._server.close()
        self.bus.close()


# -- client ----------------------------------------------------------------

class MqttClient:
    """Blocking QoS 0 client; received PUBLISHes go to a callback."""

    def __init__(self, host: str, port: int, client_id: str, on_message=None, timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._on_message = on_message
        self._write_lock = threading.Lock()
        self._packet_id = 0
        self._suback = threading.Event()
        self._pingresp = threading.Event()
        self._sock.sendall(encode_connect(client_id))
        ptype, _, body = read_packet(self._sock)
        if ptype != CONNACK or body[1] != 0:
            raise ConnectionLost(f"connect refused (type {ptype})")
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                ptype, _, body = read_packet(self._sock)
                if ptype == PUBLISH:
                    topic, payload = decode_publish(body)
                    if self._on_message is not None:
                        self._on_message(Message(topic, payload))
                elif ptype == SUBACK:
                    self._suback.set()
                elif ptype == PINGRESP:
                    self._pingresp.set()
        except (ConnectionLost, OSError):
            if self._on_message is not None:
                self._on_message(None)  # end-of-stream marker

    def publish(self, topic: str, payload: bytes | str) -> None:
        if isinstance(payload, str):
            payload = payload.encode("utf-8")
        with self._write_lock:
            self._sock.sendall(encode_publish(topic, payload))

    def subscribe(self, *filters: str, timeout: float = 10.0) -> None:
        self._packet_id += 1
        self._suback.clear()
        with self._write_lock:
            self._sock.sendall(encode_subscribe(self._packet_id, list(filters)))
        if not self._suback.wait(timeout):
            raise ConnectionLost("no SUBACK")

    def ping(self, timeout: float = 10.0) -> None:
        """Round-trip liveness check (PINGREQ/PINGRESP)."""
        self._pingresp.clear()
        with self._write_lock:
            self._sock.sendall(encode_pingreq())
        if not self._pingresp.wait(timeout):
            raise ConnectionLost("no PINGRESP")

    def close(self) -> None:
        try:
            with self._write_lock:
                self._sock.sendall(encode_disconnect())
        except OSError:
            pass
        self._sock.close()

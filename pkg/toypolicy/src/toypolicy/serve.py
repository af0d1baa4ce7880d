"""Policy wire protocol v1 server over a trained checkpoint.

Frames, verbatim:
    C: HELLO oodchess-policy 1     S: OK 1 caps=dist
    C: MOVE <fen>                  S: BEST <uci>
    C: DIST <fen>                  S: DIST <1968 log-probs>
    C: QUIT                        (close)
Anything else answers ERR <code> <message>. One request at a time per
connection; weights are read-only at serve time.
"""

from __future__ import annotations

import socket
import sys
import threading

from .model import PolicyModel

PROTOCOL_NAME = "oodchess-policy"
PROTOCOL_VERSION = "1"


def _format_dist(log_probs) -> str:
    return "DIST " + " ".join(f"{v:.10g}" for v in log_probs.tolist())


def serve_connection(model: PolicyModel, recv_line, send_line):
    line = recv_line()
    if line is None:
        return
    parts = line.split()
    if len(parts) != 3 or parts[0] != "HELLO" or parts[1] != PROTOCOL_NAME:
        send_line("ERR 400 expected HELLO oodchess-policy <version>")
        return
    if parts[2] != PROTOCOL_VERSION:
        send_line(f"ERR 505 unsupported version {parts[2]}")
        return
    send_line(f"OK {PROTOCOL_VERSION} caps=dist")
    while True:
        line = recv_line()
        if line is None or line == "QUIT":
            return
        try:
            if line.startswith("MOVE "):
                _, uci = model.predict(line[5:].strip())
                send_line(f"BEST {uci}")
            elif line.startswith("DIST "):
                send_line(_format_dist(model.log_probs(line[5:].strip())))
            else:
                send_line("ERR 400 bad frame")
        except Exception as exc:  # noqa: BLE001 - protocol surface
            send_line(f"ERR 500 {type(exc).__name__}: {exc}")


def serve_stdio(model: PolicyModel, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def recv():
        line = stdin.readline()
        return None if not line else line.rstrip("\n")

    def send(line):
        stdout.write(line + "\n")
        stdout.flush()

    serve_connection(model, recv, send)


def serve_tcp(model: PolicyModel, host: str = "127.0.0.1", port: int = 0,
              ready=None, stop_event=None):
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    sock.listen(8)
    if ready is not None:
        ready(sock.getsockname())

    def handle(conn):
        reader = conn.makefile("r", newline="\n")

        def recv():
            line = reader.readline()
            return None if not line else line.rstrip("\n")

        def send(line):
            conn.sendall((line + "\n").encode())

        try:
            serve_connection(model, recv, send)
        except OSError:
            pass
        finally:
            conn.close()

    while stop_event is None or not stop_event.is_set():
        try:
            conn, _ = sock.accept()
        except OSError:
            break
        threading.Thread(target=handle, args=(conn,), daemon=True).start()
    sock.close()

# Licensed under the MIT License.
"""Content-Length framed JSON messages over stdio, used to drive trial workers.

The parent keeps one `vr_runner.py` subprocess per worker name. Each `run`
request carries the unstructured config and task; the reply carries either the
unstructured TrialRecord (`result`) or a formatted traceback (`error`).
"""

import atexit
import json
import pathlib
import subprocess
import sys
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Any, BinaryIO, Dict, Optional, Sequence

import attrs

CONTENT_LENGTH = "Content-Length"
RUNNER_SCRIPT = str(pathlib.Path(__file__).parent / "vr_runner.py")
STOP_TIMEOUT = 10


class StreamClosedException(Exception):
    """JSON RPC stream is closed."""


def encode_message(data: Dict[str, Any]) -> bytes:
    """Frames one JSON message with its Content-Length header."""
    content = json.dumps(data).encode("utf-8")
    return f"{CONTENT_LENGTH}: {len(content)}\r\n\r\n".encode("ascii") + content


class JsonWriter:
    """Writes framed messages; safe to share between threads."""

    def __init__(self, writer: BinaryIO):
        self._writer = writer
        self._lock = threading.Lock()

    def close(self) -> None:
        with self._lock:
            if not self._writer.closed:
                self._writer.close()

    def write(self, data: Dict[str, Any]) -> None:
        if self._writer.closed:
            raise StreamClosedException()
        with self._lock:
            self._writer.write(encode_message(data))
            self._writer.flush()


class JsonReader:
    """Reads framed messages. Raises EOFError when the peer has gone."""

    def __init__(self, reader: BinaryIO):
        self._reader = reader

    def close(self) -> None:
        if not self._reader.closed:
            self._reader.close()

    def _headers(self) -> Dict[str, str]:
        headers: Dict[str, str] = {}
        while True:
            line = self._reader.readline()
            if not line:
                raise EOFError
            line = line.decode("ascii").strip()
            if not line:
                if headers:
                    return headers
                continue
            name, _, value = line.partition(":")
            headers[name.strip()] = value.strip()

    def read(self) -> Dict[str, Any]:
        if self._reader.closed:
            raise StreamClosedException()
        headers = self._headers()
        if CONTENT_LENGTH not in headers:
            raise ValueError(f"message without {CONTENT_LENGTH}: {headers}")
        length = int(headers[CONTENT_LENGTH])
        content = self._reader.read(length)
        if len(content) < length:
            raise EOFError
        return json.loads(content.decode("utf-8"))


class JsonRpc:
    """One request/response channel over a pair of byte streams."""

    def __init__(self, readable: BinaryIO, writable: BinaryIO):
        self._reader = JsonReader(readable)
        self._writer = JsonWriter(writable)

    def close(self) -> None:
        for stream in (self._reader, self._writer):
            try:
                stream.close()
            except OSError:
                pass

    def send_data(self, data: Dict[str, Any]) -> None:
        self._writer.write(data)

    def receive_data(self) -> Dict[str, Any]:
        return self._reader.read()


def create_json_rpc(readable: BinaryIO, writable: BinaryIO) -> JsonRpc:
    """Creates JSON-RPC wrapper for the readable and writable streams."""
    return JsonRpc(readable, writable)


@attrs.frozen
class _Worker:
    process: subprocess.Popen
    rpc: JsonRpc


class WorkerPool:
    """Named trial workers, each a `vr_runner.py` subprocess."""

    def __init__(self):
        self._workers: Dict[str, _Worker] = {}
        self._lock = threading.Lock()
        self._monitors = ThreadPoolExecutor(10)

    def get(self, name: str) -> Optional[JsonRpc]:
        with self._lock:
            worker = self._workers.get(name)
        return worker.rpc if worker else None

    def start(self, name: str, interpreter: Sequence[str], cwd: str) -> JsonRpc:
        """Starts worker `name` unless it is already running."""
        rpc = self.get(name)
        if rpc:
            return rpc
        process = subprocess.Popen(
            [*interpreter, RUNNER_SCRIPT],
            cwd=cwd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )
        worker = _Worker(process, create_json_rpc(process.stdout, process.stdin))
        with self._lock:
            self._workers[name] = worker
        self._monitors.submit(self._forget_when_done, name, worker)
        return worker.rpc

    def _forget_when_done(self, name: str, worker: _Worker) -> None:
        worker.process.wait()
        self._forget(name, worker)

    def _forget(self, name: str, worker: _Worker) -> None:
        with self._lock:
            if self._workers.get(name) is worker:
                del self._workers[name]
        worker.rpc.close()

    def stop_all(self) -> None:
        """Sends `exit` to every worker, waits, and drops them from the pool."""
        with self._lock:
            workers = list(self._workers.items())
        for _, worker in workers:
            try:
                worker.rpc.send_data({"id": str(uuid.uuid4()), "method": "exit"})
            except (StreamClosedException, OSError):
                pass
        for name, worker in workers:
            try:
                worker.process.wait(timeout=STOP_TIMEOUT)
            except subprocess.TimeoutExpired:
                worker.process.kill()
            self._forget(name, worker)

    def close(self) -> None:
        self.stop_all()
        self._monitors.shutdown(wait=False)


_WORKERS = WorkerPool()
atexit.register(_WORKERS.close)


@attrs.frozen
class RpcRunResult:
    """Reply to one `run` request: a record, or the worker's traceback."""

    record: Optional[Dict[str, Any]]
    exception: Optional[str] = None


def run_trial(
    worker: str,
    config: Dict[str, Any],
    task: Dict[str, Any],
    interpreter: Sequence[str] = (sys.executable,),
    cwd: Optional[str] = None,
) -> RpcRunResult:
    """Runs one task on the named worker, starting the worker if needed."""
    rpc = _WORKERS.start(worker, interpreter, cwd or str(pathlib.Path.cwd()))
    msg_id = str(uuid.uuid4())
    try:
        rpc.send_data({"id": msg_id, "method": "run", "config": config, "task": task})
        data = rpc.receive_data()
    except (EOFError, StreamClosedException, OSError):
        return RpcRunResult(None, f"Worker {worker} exited while running {task}.")

    if data.get("id") != msg_id:
        return RpcRunResult(None, f"Reply {data.get('id')} does not match {msg_id}.")
    if "error" in data:
        return RpcRunResult(None, data["error"])
    return RpcRunResult(data["result"])


def shutdown_workers() -> None:
    """Stops every worker; the next `run_trial` starts fresh ones."""
    _WORKERS.stop_all()

#!/usr/bin/env python3
"""In-interpreter harness: run a payload script and print one JSON envelope.

Usage:
    <interpreter> sandbox_runner.py <payload_path> <timeout_s>

The payload executes in this interpreter with its stdout/stderr captured.
The harness prints a sentinel line followed by a single-line JSON envelope:

    ###ENVELOPE###
    {"status": "ok|error|timeout", "stdout": ..., "stderr": ..., "exit_hint": ..., "duration_ms": ...}

Everything the parent needs is in the envelope; anything printed before the
sentinel is noise to be ignored. The wall-clock timeout is enforced here via
an interval timer, and again by the parent process as a backstop. Stdlib
only; no third-party imports.
"""
import contextlib
import io
import json
import signal
import sys
import time
import traceback

SENTINEL = "###ENVELOPE###"

STATUS_OK = "ok"
STATUS_ERROR = "error"
STATUS_TIMEOUT = "timeout"

EXIT_HINTS = {STATUS_OK: 0, STATUS_ERROR: 1, STATUS_TIMEOUT: 124}


class PayloadTimeout(BaseException):
    """Raised in the main thread when the wall clock runs out.

    Derives from BaseException so payload ``except Exception`` blocks
    cannot swallow it.
    """


def _on_alarm(signum, frame):
    raise PayloadTimeout()


def run_payload(payload_path: str, timeout_s: float) -> dict:
    """Execute the payload under a timeout and assemble the envelope.

    Raises OSError if the payload file itself cannot be read; that is a
    harness-level failure, not a payload error.
    """
    with open(payload_path, "r", encoding="utf-8", errors="replace") as fh:
        source = fh.read()

    stdout_buffer = io.StringIO()
    stderr_buffer = io.StringIO()
    status = STATUS_OK
    started = time.monotonic()

    previous_handler = signal.signal(signal.SIGALRM, _on_alarm)
    signal.setitimer(signal.ITIMER_REAL, timeout_s)
    try:
        code = compile(source, payload_path, "exec")
        payload_globals = {
            "__name__": "__main__",
            "__file__": payload_path,
            "__builtins__": __builtins__,
        }
        with contextlib.redirect_stdout(stdout_buffer), contextlib.redirect_stderr(stderr_buffer):
            exec(code, payload_globals)
    except PayloadTimeout:
        status = STATUS_TIMEOUT
        stderr_buffer.write(f"payload exceeded the {timeout_s:g}s wall-clock limit\n")
    except SystemExit as exc:
        if exc.code not in (None, 0):
            status = STATUS_ERROR
            stderr_buffer.write(f"payload exited with code {exc.code}\n")
    except BaseException:
        status = STATUS_ERROR
        stderr_buffer.write(traceback.format_exc())
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, previous_handler)

    duration_ms = int((time.monotonic() - started) * 1000)
    return {
        "status": status,
        "stdout": stdout_buffer.getvalue(),
        "stderr": stderr_buffer.getvalue(),
        "exit_hint": EXIT_HINTS[status],
        "duration_ms": duration_ms,
    }


def main(argv) -> int:
    if len(argv) != 3:
        print(f"usage: {argv[0]} <payload_path> <timeout_s>", file=sys.stderr)
        return 2
    payload_path = argv[1]
    try:
        timeout_s = float(argv[2])
    except ValueError:
        print(f"timeout_s must be a number, got {argv[2]!r}", file=sys.stderr)
        return 2

    try:
        envelope = run_payload(payload_path, timeout_s)
    except OSError as exc:
        envelope = {
            "status": STATUS_ERROR,
            "stdout": "",
            "stderr": f"cannot read payload: {exc}\n",
            "exit_hint": 1,
            "duration_ms": 0,
        }

    try:
        line = json.dumps(envelope, ensure_ascii=False)
    except (TypeError, ValueError) as exc:  # the one failure worth a nonzero exit
        print(f"envelope serialization failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(SENTINEL + "\n" + line + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

"""Python runner for candidate transfer snippets.

Usage: python3 -I ktm_runner.py <source-path>

Reads one length-prefixed JSON request from stdin, calls LLMTransfer, and
writes one length-prefixed JSON response to stdout. Anything the snippet
prints goes to stderr. Exit codes: 0 ok, 2 compile error, 3 runtime error,
4 malformed request.
"""

import json
import sys
import traceback

PROTOCOL_VERSION = 1


def report(code, message, status):
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    sys.stderr.flush()
    sys.exit(status)


def read_request(raw):
    space = raw.index(b" ")
    length = int(raw[:space].decode("ascii"))
    body = raw[space + 1 : space + 1 + length]
    if len(body) != length or raw[space + 1 + length :] != b"\n":
        raise ValueError("bad framing")
    return json.loads(body.decode("utf-8"))


def main():
    if len(sys.argv) != 2:
        report("usage", "ktm_runner.py <source-path>", 4)
    out = sys.stdout
    sys.stdout = sys.stderr

    try:
        request = read_request(sys.stdin.buffer.read())
        if request.get("protocol_version") != PROTOCOL_VERSION:
            raise ValueError("unsupported protocol version")
        tasks = request["tasks"]
        nt = int(request["nt"])
        seed = int(request["seed"])
    except Exception as exc:  # noqa: BLE001
        report("malformed-request", str(exc), 4)

    try:
        with open(sys.argv[1], encoding="utf-8") as fh:
            source = fh.read()
        namespace = {"__name__": "snippet"}
        code = compile(source, "snippet", "exec")
        exec(code, namespace)
        fn = namespace["LLMTransfer"]
    except Exception:  # noqa: BLE001
        report("compile-error", traceback.format_exc(limit=3), 2)

    try:
        result = fn(
            [t["population"] for t in tasks],
            [t["fitness"] for t in tasks],
            [t["lower"] for t in tasks],
            [t["upper"] for t in tasks],
            nt,
            seed,
        )
        transfers = [[[float(v) for v in row] for row in rows] for rows in result]
    except BaseException:  # noqa: BLE001
        report("runtime-error", traceback.format_exc(limit=5), 3)

    body = json.dumps({"transfers": transfers}, separators=(",", ":"))
    out.write("%d %s\n" % (len(body.encode("utf-8")), body))
    out.flush()
    sys.exit(0)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Reference problem plugin: the sphere function on [-5, 5]^d."""

import json
import os
import sys


def send(msg):
    sys.stdout.write(json.dumps(msg, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def main():
    params = json.loads(os.environ.get("BBOHUB_PLUGIN_PARAMS") or "{}")
    dim = int(params.get("dimension", 2))
    names = ["x%d" % i for i in range(dim)]
    space = [
        {"name": n, "kind": "float", "low": -5.0, "high": 5.0, "log_scale": False}
        for n in names
    ]
    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg["type"]
        if kind == "hello":
            send({
                "type": "hello_ack",
                "protocol": 1,
                "capabilities": ["problem"],
                "search_space": space,
                "directions": ["minimize"],
            })
        elif kind == "evaluate":
            x = [float(msg["params"][n]) for n in names]
            send({"type": "values", "values": [sum(v * v for v in x)]})
        elif kind == "shutdown":
            return
        else:
            send({"type": "error", "code": "unsupported", "message": kind})


if __name__ == "__main__":
    main()

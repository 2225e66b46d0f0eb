#!/usr/bin/env python3
"""Reference sampler plugin: uniform random search, seeded per trial."""

import json
import math
import os
import random
import signal
import sys


def send(msg):
    sys.stdout.write(json.dumps(msg, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def sample(dist, rng):
    kind = dist["kind"]
    if kind == "float":
        lo, hi = dist["low"], dist["high"]
        if dist.get("log_scale"):
            x = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        else:
            x = rng.uniform(lo, hi)
        return min(max(x, lo), hi)
    if kind == "int":
        return rng.randint(dist["low"], dist["high"])
    return rng.choice(dist["choices"])


def main():
    params = json.loads(os.environ.get("BBOHUB_PLUGIN_PARAMS") or "{}")
    seed = int(params.get("seed", 0))
    crash_after = None
    if "--crash-after" in sys.argv:
        crash_after = int(sys.argv[sys.argv.index("--crash-after") + 1])
    asks = 0
    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg["type"]
        if kind == "hello":
            send({"type": "hello_ack", "protocol": 1, "capabilities": ["sampler"]})
        elif kind == "ask":
            if crash_after is not None and asks >= crash_after:
                os.kill(os.getpid(), signal.SIGKILL)
            asks += 1
            rng = random.Random(seed * 1_000_003 + msg["trial_id"])
            out = {d["name"]: sample(d, rng) for d in msg["search_space"]}
            send({"type": "params", "trial_id": msg["trial_id"], "params": out})
        elif kind == "tell":
            send({"type": "tell_ack", "trial_id": msg["trial_id"]})
        elif kind == "shutdown":
            return
        else:
            send({"type": "error", "code": "unsupported", "message": kind})


if __name__ == "__main__":
    main()

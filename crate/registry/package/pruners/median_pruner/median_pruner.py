#!/usr/bin/env python3
"""Median stopping rule. Listed in the catalog; the runner does not execute pruners."""

import statistics


def should_prune(step, value, history, n_warmup_steps=5):
    if step < n_warmup_steps:
        return False
    peers = [h[step] for h in history if len(h) > step]
    return bool(peers) and value > statistics.median(peers)

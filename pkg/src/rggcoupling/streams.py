"""Labelled random streams and an order-preserving trial runner.

Every random draw in the package comes from a ``numpy.random.Generator``
derived from ``(master seed, label, index...)``.  Labels are hashed with a
fixed function, so a stream never depends on which worker process consumes
it or in which order trials finish.
"""

from __future__ import annotations

import hashlib
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np


def _label_word(label: str | int) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *labels: str | int) -> np.random.Generator:
    """Generator keyed by a master seed and any number of labels/indices."""
    # SeedSequence ignores trailing zero words, so the label count leads the key.
    words = [len(labels), int(seed) & 0xFFFFFFFFFFFFFFFF] + [_label_word(lab) for lab in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def child_seed(seed: int, *labels: str | int) -> int:
    """A 63-bit integer seed derived the same way as :func:`stream`."""
    return int(stream(seed, *labels).integers(0, 2**63 - 1))


def _call(args):
    fn, seed, label, idx, with_index, kwargs = args
    if with_index:
        return fn(stream(seed, label, idx), idx, **kwargs)
    return fn(stream(seed, label, idx), **kwargs)


def run_trials(
    fn: Callable[..., Any],
    seed: int,
    label: str,
    n_trials: int,
    workers: int = 1,
    with_index: bool = False,
    **kwargs: Any,
) -> list[Any]:
    """Run ``fn(rng, **kwargs)`` once per trial index and return results in index order.

    ``fn`` must be a module-level function when ``workers > 1``.  Trial ``k``
    always receives ``stream(seed, label, k)``, so the returned list is the
    same for any worker count.  With ``with_index`` the call is
    ``fn(rng, k, **kwargs)``.
    """
    jobs = [(fn, seed, label, k, with_index, kwargs) for k in range(n_trials)]
    if workers <= 1 or n_trials <= 1:
        return [_call(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs, chunksize=max(1, n_trials // (4 * workers))))


def run_jobs(fn: Callable[..., Any], jobs: Sequence[dict], workers: int = 1) -> list[Any]:
    """Map ``fn(**job)`` over ``jobs`` preserving order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(**job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_kw_call, [(fn, job) for job in jobs]))


def _kw_call(args):
    fn, job = args
    return fn(**job)

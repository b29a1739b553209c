"""Deterministic trial scheduling on a bounded thread pool.

Trial ``t`` always receives ``trial_seed(master_seed, t)``; blocks of a
vectorised verifier always receive ``trial_seed(master_seed, block_index)``
with a block size that does not depend on the worker count. Results are
reassembled in index order, so the worker count never changes a number.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np
from numpy.typing import NDArray

from covtail.ensembles.seeding import make_rng, trial_seed
from covtail.errors import ConfigError
from covtail.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")

VERIFIER_BLOCK = 4096


def resolve_workers(requested: int | str | None = None) -> int:
    """COVTAIL_WORKERS wins over the requested count; "auto"/None means one per CPU."""
    env = get_settings().COVTAIL_WORKERS
    if env is not None:
        value = env
    elif requested is None or requested == "auto":
        value = os.cpu_count() or 1
    else:
        try:
            value = int(requested)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"expected an integer or 'auto', got {requested!r}", "workers") from e
    if value < 1:
        raise ConfigError(f"must be ≥ 1, got {value}", "workers")
    return value


def _spans(total: int, size: int) -> list[tuple[int, int]]:
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def _map(work: Callable[[tuple[int, int]], T], spans: list[tuple[int, int]], workers: int) -> list[T]:
    if workers <= 1 or len(spans) <= 1:
        return [work(span) for span in spans]
    with ThreadPoolExecutor(max_workers=min(workers, len(spans))) as pool:
        return list(pool.map(work, spans))


def run_trials(
    fn: Callable[[int, int], T],
    trials: int,
    master_seed: int,
    workers: int = 1,
    chunk: int | None = None,
) -> list[T]:
    """Evaluate ``fn(trial_index, trial_seed)`` for every trial, in trial order."""
    chunk = chunk or get_settings().TRIAL_CHUNK
    logger.debug("running %d trials in chunks of %d on %d worker(s)", trials, chunk, workers)

    def work(span: tuple[int, int]) -> list[T]:
        return [fn(t, trial_seed(master_seed, t)) for t in range(*span)]

    blocks = _map(work, _spans(trials, chunk), workers)
    return [result for block in blocks for result in block]


def run_blocks(
    fn: Callable[[int, np.random.Generator], NDArray],
    total: int,
    master_seed: int,
    workers: int = 1,
    block: int = VERIFIER_BLOCK,
) -> NDArray:
    """Concatenate ``fn(size, rng)`` over fixed-size blocks of a vectorised run."""
    spans = _spans(total, block)
    index = {span: i for i, span in enumerate(spans)}

    def work(span: tuple[int, int]) -> NDArray:
        return fn(span[1] - span[0], make_rng(trial_seed(master_seed, index[span])))

    parts = _map(work, spans, workers)
    return np.concatenate(parts) if parts else np.empty(0)

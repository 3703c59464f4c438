"""Process-pool fan-out of independent local-search runs.

The instance is shipped once per worker; results come back in submission
order, so parallel and serial execution give identical output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

_INSTANCE = None


def _init(inst) -> None:
    global _INSTANCE
    _INSTANCE = inst


def _run(task):
    from .solver import local_search

    cfg, seed = task
    return local_search(_INSTANCE, cfg, seed=seed)


def map_runs(inst, tasks, jobs: int):
    """Run ``local_search(inst, cfg, seed=seed)`` for each (cfg, seed) task."""
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init, initargs=(inst,)) as pool:
        return list(pool.map(_run, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))

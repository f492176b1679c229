"""Task management for parallel episode execution on local processes.

Classes
-------
PoolManager
    Task manager backed by a `multiprocessing.Pool`.
"""
from collections import deque
import logging
import multiprocessing

from .manager import Manager, TaskFailureError


logger = logging.getLogger(__name__)


class PoolManager(Manager):
    """Run tasks in worker processes, returning results in submission order.

    Parameters
    ----------
    jobs : int
        Number of worker processes.

    Attributes
    ----------
    pending : collections.deque
        ``(tag, AsyncResult)`` pairs awaiting collection.
    failures : list of TaskFailureError
    """

    def __init__(self, jobs):
        self.jobs = max(1, int(jobs))
        self.pool = multiprocessing.Pool(processes=self.jobs)
        self.pending = deque()
        self.tasks_submitted = 0
        self.failures = []

    def empty(self):
        return len(self.pending) == 0

    def add_task(self, cmd, tag, params):
        self.pending.append((tag, self.pool.apply_async(cmd, kwds=params)))
        self.tasks_submitted += 1

    def hungry(self):
        """Keep at most two queued tasks per worker."""
        return len(self.pending) < 2 * self.jobs

    def num_workers(self):
        return self.jobs

    def run_task(self):
        """Wait for the oldest pending task and return ``(tag, result)``."""
        try:
            tag, handle = self.pending.popleft()
        except IndexError:
            return None

        try:
            return tag, handle.get()
        except Exception as e:
            failure = TaskFailureError(tag, e)
            logger.error('%s', failure)
            self.failures.append(failure)
            return None

    def close(self):
        self.pool.close()
        self.pool.join()

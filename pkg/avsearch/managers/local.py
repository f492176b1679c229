"""Task management for local, serial episode execution.

Classes
-------
LocalManager
    Task manager for running tasks on the local machine.
LocalTask
    Wrapper for running a task locally.
"""
from collections import deque
import logging
import uuid

from .manager import Manager, TaskFailureError


logger = logging.getLogger(__name__)


class LocalManager(Manager):
    """Task manager for running tasks one after another in this process.

    Attributes
    ----------
    tasks : collections.deque of LocalTask
        The tasks to run locally.
    tasks_submitted : int
    failures : list of TaskFailureError
        Failures reported so far.
    """

    def __init__(self):
        self.tasks = deque()
        self.tasks_submitted = 0
        self.failures = []

    def empty(self):
        """Determine if the task queue is empty.

        Returns
        -------
        empty : bool
            True if the queue contains no tasks, False otherwise.
        """
        return len(self.tasks) == 0

    def add_task(self, cmd, tag, params):
        task = LocalTask(cmd, tag, params)
        self.tasks.append(task)
        self.tasks_submitted += 1

    def hungry(self):
        """The local manager runs tasks serially, so it always has room."""
        return True

    def num_workers(self):
        return 1

    def run_task(self):
        """Run the next task on the task list and return its result.

        Returns
        -------
        tag : str
        result : object
            Only returned on success; None is returned when the queue is empty
            or the task failed.
        """
        try:
            task = self.tasks.popleft()
        except IndexError:
            return None

        try:
            return task.tag, task.run()
        except TaskFailureError as e:
            logger.error('%s', e)
            self.failures.append(e)
            return None


class LocalTask(object):
    """A task to run with the supplied parameters.

    Parameters
    ----------
    cmd : function or callable object
        The command to run.
    tag : str
        Tag with metadata about the task.
    params : dict
        Keyword arguments of the command.

    Attributes
    ----------
    id : str
        Internal task id.
    """
    def __init__(self, cmd, tag, params):
        self.id = str(uuid.uuid4())
        self.cmd = cmd
        self.tag = tag
        self.params = params

    def run(self):
        """Run the task and return the result.

        Raises
        ------
        TaskFailureError
            If the command raised.
        """
        try:
            return self.cmd(**self.params)
        except Exception as e:
            raise TaskFailureError(self.tag, e)

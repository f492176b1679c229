"""Base class for avsearch task managers.

Classes
-------
Manager
    Base class for task managers.
TaskFailureError
    Raised when a task fails for any reason.
"""


class TaskFailureError(Exception):
    """Raised when a task fails for any reason."""
    def __init__(self, tag, e):
        self.tag = tag
        msg = "Task {} failed: {}".format(tag, e)
        super(TaskFailureError, self).__init__(msg)


class Manager(object):
    """Base class for task managers.

    Notes
    -----
    To implement a new local or distributed manager, create an __init__
    method and override every method below.
    """

    def add_task(self, cmd, tag, params):
        """Add a task for the manager to run.

        Parameters
        ----------
        cmd : callable
            Function called as ``cmd(**params)``; must be picklable for
            managers running tasks in other processes.
        tag : str
            Task id used when reporting results and failures.
        params : dict
            Keyword arguments of the task.
        """
        raise NotImplementedError

    def empty(self):
        """True when no task is queued or running."""
        raise NotImplementedError

    def hungry(self):
        """True when the manager can accept more tasks."""
        raise NotImplementedError

    def num_workers(self):
        raise NotImplementedError

    def run_task(self):
        """Wait for the next task and return ``(tag, result)``.

        Returns None when the task failed; the failure is logged.
        """
        raise NotImplementedError

    def close(self):
        """Release worker resources."""
        pass

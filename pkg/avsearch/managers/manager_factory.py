import logging


logger = logging.getLogger(__name__)

MANAGERS = ('local', 'pool')


def create_manager(manager_type='local', jobs=1):
    """Create the task manager running a suite's episodes.

    Parameters
    ----------
    manager_type : {'local', 'pool'}
        ``local`` runs tasks serially in this process; ``pool`` runs them in
        a `multiprocessing.Pool`.
    jobs : int
        Worker processes. More than one job always selects the pool.

    Returns
    -------
    manager : avsearch.managers.manager.Manager

    Raises
    ------
    ValueError
        On an unknown manager type.
    """
    if manager_type not in MANAGERS:
        raise ValueError('unknown manager {!r}; expected one of {}'.format(
            manager_type, ', '.join(MANAGERS)))
    if manager_type == 'pool' or jobs > 1:
        from .pool import PoolManager
        logger.debug('Using a process pool of %d workers', jobs)
        return PoolManager(jobs)
    else:
        from .local import LocalManager
        return LocalManager()

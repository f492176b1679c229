from .manager_factory import create_manager
from .manager import TaskFailureError

__all__ = ['create_manager', 'TaskFailureError']

"""Top-level imports for avsearch.

At the top level, the package grants access to the episode runner, the suite
runner and the configuration.

See Also
--------
avsearch.harness
    Episode and suite orchestration.
avsearch.configuration
    Scenario file handling.
"""

__version__ = '0.1.0'

from .configuration import AvsConfig
from .domain import PlannerVariant, Scenario
from .harness import run_episode, run_suite

__all__ = ['AvsConfig', 'PlannerVariant', 'Scenario', 'run_episode',
           'run_suite', 'managers']

"""Configuration settings for `avsearch` suites.

Classes
-------
AvsConfig
    Suite configuration read from an INI scenario file.
ConfigGroup
    Object-oriented interface for hierarchical config settings.

Functions
---------
parse_seeds
    Expand a seed range or list into a list of seeds.
parse_variants
    Split a variant list.
parse_exit_constant
    Read the exit confidence constant.

Notes
-----
A scenario file is read on top of `AvsConfig.DEFAULTS`. Every option is
coerced to the type of its default. Sections named ``scenario:<name>``
describe maps and ``detector:<target id>`` sections override the detector
statistics of a single target. When no path is given, the file named by
the ``AVSEARCHRC`` environment variable is used.
"""
import configparser
import copy
import os
import re


SCENARIO_PREFIX = 'scenario:'
DETECTOR_PREFIX = 'detector:'
SEED_RANGE = re.compile(r'^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$')


class ConfigFileDoesNotExistError(Exception):
    def __init__(self, configfile):
        msg = "{} is not a valid avsearch config file".format(configfile)
        super(ConfigFileDoesNotExistError, self).__init__(msg)


class InvalidConfigError(Exception):
    def __init__(self, section, option, reason):
        msg = "Invalid value for [{}] {}: {}".format(section, option, reason)
        super(InvalidConfigError, self).__init__(msg)


class AvsConfig(object):
    """Configuration of a search suite.

    Configurations consist of the defaults defined in this class and the
    values read from a scenario file.

    Parameters
    ----------
    path : str, optional
        Scenario file. Defaults to ``$AVSEARCHRC``.
    use_defaults : bool, optional
        If true, only use the default configuration. Default: False.

    Attributes
    ----------
    config : dict
        Dictionary of configuration values.
    configfile : str or None
        The file that was read.
    scenarios : dict
        Scenario name to `ConfigGroup`, in file order.
    detectors : dict
        Target id to `ConfigGroup` of detector overrides.

    Raises
    ------
    ConfigFileDoesNotExistError
        If the file does not exist.
    InvalidConfigError
        If a value cannot be coerced to the type of its default.

    Notes
    -----
    All config values can be addressed by key index (dictionary style) or by
    dot operator (object-oriented style). Options of ``[global]`` are also
    available directly on the config object.
    """

    DEFAULTS = {
        'global': {
            'output': 'avsearch_results',
            'variants': 'pomp-be-pd',
            'seeds': '0..9',
            'jobs': 1,
            'manager': 'local',
            'dump_heatmaps': False,
        },
        'map': {
            'delta_theta': 90,
            'cell_size': 1.0,
        },
        'fov': {
            'half_angle': 45.0,
            'max_range': 5.0,
        },
        'pomcp': {
            'gamma': 0.95,
            'simulations': 1024,
            'uct_c': 200.0,
            'max_tree_depth': 30,
            'rollout_depth': 30,
            'particles': 1024,
            'workers': 1,
        },
        'detector': {
            'precision': 1.0,
            'recall': 1.0,
            'fp_rate': 0.0,
            'sigma': 1.0,
            'score_threshold': 0.9,
            'score_low': 0.9,
            'score_high': 1.0,
            'likelihood_convention': 'figure',
        },
        'rewards': {
            'found': 100.0,
            'step': -1.0,
            'revisit': -10.0,
        },
        'exit': {
            'c': 'auto',
        },
        'protocol': {
            'episode_cap': 200,
            'd_goal': 2.0,
        },
        'logging': {
            'level': 'WARNING',
            'logfile': '',
        },
    }

    SCENARIO_DEFAULTS = {
        'map': '',
        'preset': '',
        'seed': 0,
        'width': 0,
        'height': 0,
        'rooms': 1,
        'density': 0.3,
        'start': '',
        'targets': '',
        'num_targets': 1,
    }

    def __init__(self, path=None, use_defaults=False):
        self.config = copy.deepcopy(AvsConfig.DEFAULTS)
        self.configfile = None
        scenarios = {}
        detectors = {}

        if not use_defaults:
            configfile = path if path is not None else os.getenv('AVSEARCHRC', '')
            if not configfile or not os.path.isfile(configfile):
                raise ConfigFileDoesNotExistError(configfile)
            self.configfile = os.path.abspath(configfile)

            cfg = configparser.ConfigParser()
            with open(configfile, 'r') as f:
                try:
                    cfg.read_file(f)
                except configparser.Error as e:
                    raise InvalidConfigError('-', '-', str(e))

            for section in cfg.sections():
                if section.startswith(SCENARIO_PREFIX):
                    name = section[len(SCENARIO_PREFIX):].strip()
                    scenarios[name] = self._read_section(
                        cfg, section, AvsConfig.SCENARIO_DEFAULTS)
                    self.config[section] = scenarios[name]
                elif section.startswith(DETECTOR_PREFIX):
                    target = section[len(DETECTOR_PREFIX):].strip()
                    detectors[target] = self._read_section(
                        cfg, section, AvsConfig.DEFAULTS['detector'],
                        fill=False)
                    self.config[section] = detectors[target]
                else:
                    defaults = AvsConfig.DEFAULTS.get(section, {})
                    self.config.setdefault(section, {}).update(
                        self._read_section(cfg, section, defaults, fill=False))

        # Instantiate config group objects
        self.avsearch = ConfigGroup(self.config['global'])
        self.map = ConfigGroup(self.config['map'])
        self.fov = ConfigGroup(self.config['fov'])
        self.pomcp = ConfigGroup(self.config['pomcp'])
        self.detector = ConfigGroup(self.config['detector'])
        self.rewards = ConfigGroup(self.config['rewards'])
        self.exit = ConfigGroup(self.config['exit'])
        self.protocol = ConfigGroup(self.config['protocol'])
        self.logging = ConfigGroup(self.config['logging'])
        self.scenarios = {name: ConfigGroup(data) for name, data in scenarios.items()}
        self.detectors = {name: ConfigGroup(data) for name, data in detectors.items()}

    @staticmethod
    def _read_section(cfg, section, defaults, fill=True):
        values = copy.deepcopy(defaults) if fill else {}
        for option in cfg.options(section):
            t = type(defaults[option]) if option in defaults else str
            try:
                if t is bool:
                    val = cfg.getboolean(section, option)
                elif t is int:
                    val = cfg.getint(section, option)
                elif t is float:
                    val = cfg.getfloat(section, option)
                else:
                    val = cfg.get(section, option)
            except ValueError as e:
                raise InvalidConfigError(section, option, str(e))
            values[option] = val
        return values

    def __getattr__(self, attr):
        if attr not in self.__dict__:
            if 'avsearch' in self.__dict__ and attr in self.__dict__['avsearch']:
                return getattr(self.__dict__['avsearch'], attr)
            else:
                msg = '{} has no attribute {}'
                raise AttributeError(msg.format(self.__class__.__name__, attr))
        else:
            return self.__dict__[attr]

    @property
    def directory(self):
        """Directory relative map paths are resolved against."""
        if self.configfile is None:
            return os.getcwd()
        return os.path.dirname(self.configfile)

    def detector_options(self, target):
        """Detector settings of ``target``: ``[detector]`` plus overrides."""
        options = dict(self.config['detector'])
        if target in self.detectors:
            options.update(self.detectors[target].data)
        return options

    def save_config(self, path):
        """Write the current config to file.

        Parameters
        ----------
        path : str
            Path to the output config file.
        """
        config = configparser.ConfigParser()
        config.read_dict({section: {k: str(v) for k, v in values.items()}
                          for section, values in self.config.items()})
        with open(path, 'w') as f:
            config.write(f)


class ConfigGroup(object):
    """Container class for hierarchical configuration.

    Parameters
    ----------
    data : dict
        Key/value pairs for configuration values.

    Notes
    -----
    Configuration values should be accessed using the ``.`` operator.
    """

    def __init__(self, data=None, **kws):
        if data is None:
            data = {}
        data.update(kws)
        self.data = data

    def __getattr__(self, attr):
        if attr != 'data':
            if attr in self.__dict__['data']:
                return self.__dict__['data'][attr]
            else:
                msg = '{} has no attribute {}'
                raise AttributeError(msg.format(self.__class__.__name__, attr))
        else:
            return self.__dict__['data']

    def __setattr__(self, attr, val):
        if attr != 'data':
            self.__dict__['data'][attr] = val
        else:
            self.__dict__[attr] = val

    def __contains__(self, key):
        return key in self.data

    def __str__(self):
        return str(self.data)


def parse_seeds(text):
    """Expand ``"a..b"`` (inclusive) or a comma/space separated list.

    Raises
    ------
    InvalidConfigError
        If ``text`` is malformed or the range is empty.
    """
    if isinstance(text, int):
        return [text]
    match = SEED_RANGE.match(text)
    if match is not None:
        lo, hi = int(match.group(1)), int(match.group(2))
        if hi < lo:
            raise InvalidConfigError('global', 'seeds', 'empty range {}'.format(text))
        return list(range(lo, hi + 1))
    try:
        return [int(s) for s in re.split(r'[,\s]+', text.strip()) if s]
    except ValueError:
        raise InvalidConfigError('global', 'seeds', 'cannot parse {!r}'.format(text))


def parse_variants(text):
    return [v for v in re.split(r'[,\s]+', text.strip()) if v]


def parse_exit_constant(value):
    """Exit confidence constant; ``auto`` (None) lets it follow ``k``.

    Raises
    ------
    InvalidConfigError
        If ``value`` is neither ``auto`` nor a positive integer.
    """
    if isinstance(value, int):
        c = value
    elif str(value).strip().lower() == 'auto':
        return None
    else:
        try:
            c = int(str(value).strip())
        except ValueError:
            raise InvalidConfigError('exit', 'c',
                                     'expected auto or an integer, got {!r}'.format(value))
    if c < 1:
        raise InvalidConfigError('exit', 'c', 'must be at least 1, got {}'.format(c))
    return c

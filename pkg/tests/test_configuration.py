import copy
import os

import pytest

from avsearch.configuration import (AvsConfig, ConfigGroup,
                                    ConfigFileDoesNotExistError,
                                    InvalidConfigError, parse_exit_constant,
                                    parse_seeds, parse_variants)


FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
SCENARIO_FILE = os.path.join(FIXTURES, 'scenario.ini')


class TestAvsConfig(object):
    def test_init(self, monkeypatch):
        # Test the default configuration.
        cfg = AvsConfig(use_defaults=True)
        assert cfg.config == AvsConfig.DEFAULTS
        assert cfg.scenarios == {}
        assert cfg.configfile is None

        defaults = copy.deepcopy(AvsConfig.DEFAULTS)
        defaults['global']['seeds'] = '0..1'
        defaults['global']['variants'] = 'pomp-be-pd, random'
        defaults['pomcp']['simulations'] = 64
        defaults['pomcp']['particles'] = 64
        defaults['protocol']['episode_cap'] = 60

        # Test loading through the AVSEARCHRC environment variable.
        monkeypatch.setenv('AVSEARCHRC', SCENARIO_FILE)
        cfg = AvsConfig()
        assert cfg.pomcp.simulations == 64
        assert cfg.protocol.episode_cap == 60
        for section, values in defaults.items():
            assert cfg.config[section] == values
        assert cfg.configfile == SCENARIO_FILE
        assert cfg.directory == FIXTURES
        monkeypatch.delenv('AVSEARCHRC')

        # Test loading from an explicit path.
        cfg = AvsConfig(path=SCENARIO_FILE)
        assert cfg.pomcp.particles == 64

        with pytest.raises(ConfigFileDoesNotExistError):
            cfg = AvsConfig()

        fakerc = os.path.abspath(os.path.join('foo', 'bar', 'baz'))
        monkeypatch.setenv('AVSEARCHRC', fakerc)
        with pytest.raises(ConfigFileDoesNotExistError):
            cfg = AvsConfig()

        with pytest.raises(ConfigFileDoesNotExistError):
            cfg = AvsConfig(path=fakerc)

    def test_global_fallback(self):
        cfg = AvsConfig(path=SCENARIO_FILE)
        assert cfg.seeds == '0..1'
        assert cfg.manager == 'local'
        assert cfg.jobs == 1
        with pytest.raises(AttributeError):
            cfg.not_an_option

    def test_scenarios(self):
        cfg = AvsConfig(path=SCENARIO_FILE)
        assert list(cfg.scenarios) == ['room', 'generated']

        room = cfg.scenarios['room']
        assert room.map == 'room.map'
        assert room.targets == '3'
        assert room.start == '1 2 0'
        assert room.preset == ''
        assert room.num_targets == 1

        generated = cfg.scenarios['generated']
        assert generated.width == 10
        assert generated.height == 10
        assert generated.seed == 4
        assert generated.num_targets == 2
        assert generated.density == pytest.approx(0.2)
        assert isinstance(generated.width, int)
        assert isinstance(generated.density, float)

    def test_detector_options(self):
        cfg = AvsConfig(path=SCENARIO_FILE)
        assert cfg.detector_options('t3')['recall'] == pytest.approx(0.8)
        assert cfg.detector_options('t3')['precision'] == 1.0
        assert cfg.detector_options('t0') == AvsConfig.DEFAULTS['detector']

    def test_invalid_values(self, tmpdir):
        path = str(tmpdir.join('bad.ini'))
        with open(path, 'w') as f:
            f.write('[pomcp]\nsimulations = many\n')
        with pytest.raises(InvalidConfigError):
            AvsConfig(path=path)

        with open(path, 'w') as f:
            f.write('[protocol]\nepisode_cap 10\n')
        with pytest.raises(InvalidConfigError):
            AvsConfig(path=path)

        with open(path, 'w') as f:
            f.write('[global]\ndump_heatmaps = perhaps\n')
        with pytest.raises(InvalidConfigError):
            AvsConfig(path=path)

    def test_save_config(self, tmpdir):
        path = str(tmpdir.join('config.ini'))
        cfg = AvsConfig(path=SCENARIO_FILE)
        cfg.save_config(path)

        reloaded = AvsConfig(path=path)
        for section in AvsConfig.DEFAULTS:
            assert reloaded.config[section] == cfg.config[section]
        assert reloaded.scenarios['room'].data == cfg.scenarios['room'].data
        assert reloaded.detectors['t3'].data == cfg.detectors['t3'].data


class TestConfigGroup(object):
    def test_init(self):
        # Initialize with an empty dictionary
        g = ConfigGroup()
        assert g.data == {}

        # Initialize with a simple dictionary passed to data
        correct1 = {'a': 1, 'b': 'foo', 'c': 0.16854}
        g = ConfigGroup(data=copy.deepcopy(correct1))
        assert g.data == correct1

        # Initialize with keyword arguments
        correct2 = {'d': 'bar', 'e': 65.68473, 'f': 8675}
        g = ConfigGroup(**copy.deepcopy(correct2))
        assert g.data == correct2

        # Initialize with both
        correct3 = copy.deepcopy(correct1)
        correct3.update(correct2)
        g = ConfigGroup(data=copy.deepcopy(correct1),
                        **copy.deepcopy(correct2))
        assert g.data == correct3

    def test_getattr_setattr(self):
        g = ConfigGroup({'a': 1})
        assert g.a == 1
        g.b = 'foo'
        assert g.data == {'a': 1, 'b': 'foo'}
        assert 'b' in g
        with pytest.raises(AttributeError):
            g.c


def test_parse_seeds():
    assert parse_seeds('0..9') == list(range(10))
    assert parse_seeds(' 3 .. 3 ') == [3]
    assert parse_seeds('1, 4,7') == [1, 4, 7]
    assert parse_seeds('5 6') == [5, 6]
    assert parse_seeds(12) == [12]

    with pytest.raises(InvalidConfigError):
        parse_seeds('9..0')
    with pytest.raises(InvalidConfigError):
        parse_seeds('a..b')


def test_parse_variants():
    assert parse_variants('pomp-be-pd, random') == ['pomp-be-pd', 'random']
    assert parse_variants('pomp') == ['pomp']
    assert parse_variants('  ') == []


def test_parse_exit_constant():
    assert parse_exit_constant('auto') is None
    assert parse_exit_constant(' AUTO ') is None
    assert parse_exit_constant('12') == 12
    assert parse_exit_constant(3) == 3
    assert parse_exit_constant(AvsConfig(use_defaults=True).exit.c) is None

    for value in ('0', '-2', 'ten', '1.5'):
        with pytest.raises(InvalidConfigError):
            parse_exit_constant(value)

from argparse import Namespace

import pytest

from copula_util import DEFAULT_SEED, ENV_JOBS, ENV_SEED, DataError, initialize


@pytest.fixture
def clean_environment(monkeypatch):
    monkeypatch.delenv(ENV_SEED, raising=False)
    monkeypatch.delenv(ENV_JOBS, raising=False)
    return monkeypatch


class TestInitialize:

    def test_defaults(self, clean_environment):
        config = initialize(Namespace(seed=None, jobs=None))
        assert config == {'seed': DEFAULT_SEED, 'jobs': 1, 'quiet': False}
        assert DEFAULT_SEED == 42

    def test_seed_from_environment(self, clean_environment):
        clean_environment.setenv(ENV_SEED, '9')
        assert initialize(Namespace(seed=None))['seed'] == 9

    def test_flag_overrides_environment(self, clean_environment):
        clean_environment.setenv(ENV_SEED, '9')
        clean_environment.setenv(ENV_JOBS, '3')
        config = initialize(Namespace(seed=5, jobs=2))
        assert (config['seed'], config['jobs']) == (5, 2)

    def test_jobs_from_environment(self, clean_environment):
        clean_environment.setenv(ENV_JOBS, '-1')
        assert initialize(Namespace(jobs=None))['jobs'] == -1

    def test_blank_environment_falls_back_to_the_default(self, clean_environment):
        clean_environment.setenv(ENV_SEED, ' ')
        assert initialize(Namespace())['seed'] == DEFAULT_SEED

    @pytest.mark.parametrize('name, value', [(ENV_SEED, 'abc'), (ENV_SEED, '-3'), (ENV_JOBS, '0'), (ENV_JOBS, 'many')])
    def test_rejects_invalid_environment(self, clean_environment, name, value):
        clean_environment.setenv(name, value)
        with pytest.raises(DataError):
            initialize(Namespace(seed=None, jobs=None))

    def test_rejects_negative_seed_flag(self, clean_environment):
        with pytest.raises(DataError, match='non-negative'):
            initialize(Namespace(seed=-1))

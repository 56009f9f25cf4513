import pytest

from reservoircrowd.utils.config import CrowdConfig

SMALL = dict(
    n_res=16,
    p_s_res=0.5,
    n_agent=2,
    t_max=5,
    n_episodes=3,
    n_trials=1,
    jobs=1,
    checkpoint_interval=2,
    verbose=False,
)


def small_settings(**overrides):
    return CrowdConfig(overrides={**SMALL, **overrides}).settings


@pytest.fixture(scope='session')
def make_settings():
    return small_settings


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    root = tmp_path / 'runs'
    monkeypatch.setenv('RESERVOIRCROWD_OUTPUT', str(root))
    return root

import pytest
from click.testing import CliRunner

from realizer import create_app
from realizer.forcing import Cohen
from realizer.forcing import condition_system
from realizer.forcing import Trivial


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def api_client():
    class Config:
        TESTING = True
        CACHE_TYPE = 'SimpleCache'
        CACHE_DEFAULT_TIMEOUT = 0
        REALIZER_FUEL = 100_000
        REALIZER_MAX_FUEL = 1_000_000
        REALIZER_TRIALS = 10

    app = create_app(Config)

    with app.test_client() as client:
        yield client


@pytest.fixture
def cohen():
    return Cohen()


@pytest.fixture
def trivial():
    return Trivial()


@pytest.fixture
def diamond():
    return condition_system('poset:diamond')

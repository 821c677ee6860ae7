import sys

from click.testing import CliRunner
from loguru import logger
import pytest


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger.remove()
    logger.add(sys.stderr)


@pytest.fixture
def runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        # click >= 8.2 always keeps stderr apart
        return CliRunner()


@pytest.fixture
def sample_csv(tmp_path):
    path = tmp_path / 'sample.csv'
    path.write_text('value,weight\n1,0.5\n4,0.5\n')
    return str(path)

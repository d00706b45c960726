import pytest

from bhzkit.rules import enumerate_negative


@pytest.fixture(scope="session")
def catalog():
    return enumerate_negative()

from pathlib import Path

import pytest

from memgift.gift import GIFT64, GIFT128, load_kat_file

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def kat64():
    return load_kat_file(DATA_DIR / "gift64.kat")


@pytest.fixture(scope="session")
def kat128():
    return load_kat_file(DATA_DIR / "gift128.kat")


@pytest.fixture(params=[GIFT64, GIFT128], ids=["gift64", "gift128"])
def variant(request):
    return request.param

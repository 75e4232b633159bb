import pytest

import chipletdse
from chipletdse.model import load_bundle


@pytest.fixture(scope="session")
def bundle():
    return load_bundle(chipletdse.bundled_spec_path())


@pytest.fixture(scope="session")
def infotainment(bundle):
    return bundle.package

import random

import pytest

from ecdtls.curve import builtin_registry

CURVE_NAMES = ["secp160r1", "secp192r1", "secp224r1", "secp256r1"]


@pytest.fixture(scope="session")
def registry():
    return builtin_registry()


@pytest.fixture(scope="session")
def curves(registry):
    return {name: registry.get(name) for name in CURVE_NAMES}


@pytest.fixture(scope="session")
def toy(registry):
    return registry.get("toy59")


@pytest.fixture
def rng():
    return random.Random(0xDE)

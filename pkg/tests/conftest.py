import numpy as np
import pytest


@pytest.fixture(scope="session")
def trial_division_is_prime():
    """Independent primality oracle, deliberately naive."""

    def check(n: int) -> bool:
        if n < 2:
            return False
        f = 2
        while f * f <= n:
            if n % f == 0:
                return False
            f += 1
        return True

    return check


def assert_bit_identical(a, b, context=""):
    if isinstance(a, np.ndarray):
        assert np.array_equal(a, b), f"arrays differ bitwise {context}"
    else:
        assert a == b, f"values differ {context}: {a!r} != {b!r}"

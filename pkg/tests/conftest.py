import pytest

from eclipse import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # front-load JIT compilation so timed tests measure algorithm time
    kernels.warmup()


@pytest.fixture(scope="session")
def lexicon():
    from eclipse import facts

    return facts.default_lexicon()

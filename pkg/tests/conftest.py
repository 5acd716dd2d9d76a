import pytest

from fuzzseg import NoiseSpec, PhantomSpec, generate_phantom

ACCEPTANCE_REGIONS = (("band", 60), ("band", 120), ("band", 200))


@pytest.fixture(scope="session")
def acceptance_phantom():
    """64x64, three bands {60, 120, 200}, 5% salt noise, seed 42."""
    spec = PhantomSpec(
        width=64,
        height=64,
        regions=ACCEPTANCE_REGIONS,
        noise=NoiseSpec("salt", 0.05),
        seed=42,
    )
    return generate_phantom(spec)

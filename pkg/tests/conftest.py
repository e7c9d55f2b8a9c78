import numpy as np
import pytest

from znkit import CyclicGroup, GridFunction, SigmaAlgebra, build_sieve


@pytest.fixture(scope="session")
def sieve_1e6():
    return build_sieve(10**6)


@pytest.fixture(scope="session")
def sieve_1e4():
    return build_sieve(10**4)


def random_function(group: CyclicGroup, rng, scale: float = 1.0) -> GridFunction:
    return GridFunction(group, rng.normal(size=group.modulus) * scale)


def random_partition(group: CyclicGroup, rng, atoms: int) -> SigmaAlgebra:
    n = group.modulus
    atoms = min(atoms, n)
    labels = rng.integers(0, atoms, size=n)
    # guarantee every label is hit
    labels[rng.permutation(n)[:atoms]] = np.arange(atoms)
    return SigmaAlgebra.from_labels(group, labels)

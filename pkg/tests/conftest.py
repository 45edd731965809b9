import pytest

from infplace.anf import BooleanFunctionANF
from infplace.placement import PlacementConfig

# The K=9 three-monomial function used across the suites, with the two
# hand-checked placements: consecutive index windows and an overlapping
# variant whose optimal scheme needs only four pieces.
EXAMPLE_FUNCTION_JSON = '{"K":9,"monomials":[[1,4,7],[2,5,7,8],[3,6,9]]}\n'
WINDOW_PLACEMENT_JSON = (
    '{"N":3,"M":6,"subsets":[[1,2,3,4,5,6],[4,5,6,7,8,9],[1,2,3,7,8,9]]}\n'
)
OVERLAP_PLACEMENT_JSON = (
    '{"N":3,"M":6,"subsets":[[1,2,4,5,6,7],[3,4,5,6,8,9],[1,2,3,7,8,9]]}\n'
)
DISJOINT_PAIRS_JSON = '{"K":6,"monomials":[[1,2],[3,4],[5,6]]}\n'


@pytest.fixture
def example_function() -> BooleanFunctionANF:
    return BooleanFunctionANF.from_indices(9, [[1, 4, 7], [2, 5, 7, 8], [3, 6, 9]])


@pytest.fixture
def window_placement() -> PlacementConfig:
    return PlacementConfig.from_indices(
        6, [[1, 2, 3, 4, 5, 6], [4, 5, 6, 7, 8, 9], [1, 2, 3, 7, 8, 9]]
    )


@pytest.fixture
def overlap_placement() -> PlacementConfig:
    return PlacementConfig.from_indices(
        6, [[1, 2, 4, 5, 6, 7], [3, 4, 5, 6, 8, 9], [1, 2, 3, 7, 8, 9]]
    )


@pytest.fixture
def disjoint_pairs() -> BooleanFunctionANF:
    return BooleanFunctionANF.from_indices(6, [[1, 2], [3, 4], [5, 6]])

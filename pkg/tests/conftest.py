import numpy as np
import pytest

from subridge.solvers import ProblemInstance


@pytest.fixture
def worked():
    """2x3 instance small enough to check by hand.

    A has orthonormal nonzero columns (1,0), (0,1) and a zero third column;
    with y = (1, 1) and shift 1 the shifted Gram is 2I, the dual vector is
    (1/2, 1/2), and the coefficients are (1/2, 1/2, 0).
    """
    a = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    y = np.array([1.0, 1.0])
    return ProblemInstance(a, y, 1.0)

"""
测试公共夹具
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.core.linalg import stack_factors  # noqa: E402
from src.horseshoe.params import ConstructionParams  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cat_cocycle():
    """猫映射 [[2,1],[1,1]] 在不动点处的周期 1 余环"""
    return stack_factors([[[2.0, 1.0], [1.0, 1.0]]])


@pytest.fixture
def p100_params():
    return ConstructionParams(d0=2, k=1, lam=(-1.0, 1.0), mu=(1.0, 1.0), eta=0.1, rho=1.0,
                              n=5, ell=100, m=2, c_bound=1.0)


@pytest.fixture
def small_params():
    """ℓ=8, n=2 时 L = 1017，逐点求值可用"""
    return ConstructionParams(d0=2, k=1, lam=(-1.0, 1.0), mu=(1.0, 1.0), eta=0.1, rho=1.0,
                              n=2, ell=8, m=2, c_bound=1.0)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shopfixture import SHOP_DIR, run_full_pipeline  # noqa: E402


@pytest.fixture(scope="session")
def shop_dir() -> Path:
    return SHOP_DIR


@pytest.fixture(scope="session")
def pipeline_store(tmp_path_factory):
    """One fully simulated + annotated fixture experiment, shared read-only."""
    out = tmp_path_factory.mktemp("pipeline") / "shop-e2e"
    return run_full_pipeline(out)

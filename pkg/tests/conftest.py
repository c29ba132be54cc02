import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weakparse.executor import TableEnv


@pytest.fixture
def medal_table() -> TableEnv:
    """Small medal table with a unique Gold maximum and repeated values."""
    return TableEnv(
        "medals",
        (("Country", "text"), ("Gold", "number"), ("Silver", "number"), ("Year", "number")),
        (
            ("norway", 10, 4, 2006),
            ("china", 12, 7, 2007),
            ("kenya", 5, 7, 2007),
            ("brazil", 3, 1, 2008),
        ),
    )


@pytest.fixture
def year_table() -> TableEnv:
    """Year column [2006, 2007, 2007, 2008] backing the filter/count case."""
    return TableEnv(
        "visits",
        (("Year", "number"), ("Visitors", "number"), ("Site", "text")),
        ((2006, 210, "museum"), (2007, 340, "harbor"), (2007, 125, "museum"), (2008, 98, "castle")),
    )

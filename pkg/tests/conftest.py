import numpy as np
import pytest

from benders_atoms.milp import OriginalProblem


@pytest.fixture(scope="session")
def poc() -> OriginalProblem:
    """The two-binary / four-continuous showcase instance: its optimum is
    x = (1, 0), y = (1, 1, 0, 0) with objective 2.0."""
    A = np.array(
        [[0, 0], [0, 0], [0, 0], [0, 0], [-1, 0], [-1, 0], [0, -1], [0, -1]],
        dtype=float,
    )
    G = np.array(
        [
            [1, 0, 1, 0],
            [1, 0, 0, 1],
            [0, 1, 1, 0],
            [0, 1, 0, 1],
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ],
        dtype=float,
    )
    b = np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=float)
    return OriginalProblem(
        n=2,
        p=4,
        m1=8,
        m2=1,
        A=A,
        G=G,
        b=b,
        B=[[-1, -1]],
        b_prime=[-1],
        c=[-15, -10],
        h=[8, 9, 5, 6],
    )


@pytest.fixture()
def poc_file(poc, tmp_path):
    from benders_atoms.milp import save_instance

    path = tmp_path / "poc.milp.json"
    save_instance(poc, path)
    return path

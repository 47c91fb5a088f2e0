"""Smoke test for the lebesgue_py extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/lebesgue_py-*.whl
    python python/smoke_test.py
"""

import json

import lebesgue_py as lb


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    # [[2,1],[1,1]] against the first axis: ac = diag(1, 0), sing = ones
    s = lb.PsdMatrix([[2.0, 1.0], [1.0, 1.0]])
    t = lb.PsdMatrix.diag([1.0, 0.0])
    ac, sing, gaps = lb.decompose(s, t)
    assert all(close(x, y) for x, y in zip(sum(ac.real(), []), [1, 0, 0, 0])), ac.real()
    assert all(close(x, 1.0) for x in sum(sing.real(), [])), sing.real()
    assert gaps, "iteration trace is empty"

    unique, c = lb.uniqueness(s, t)
    assert unique and close(c, 1.0, 1e-9), (unique, c)

    half = lb.parallel_sum(lb.PsdMatrix.diag([1.0]), lb.PsdMatrix.diag([1.0]))
    assert close(half.real()[0][0], 0.5)

    assert lb.is_singular_pair(lb.PsdMatrix.diag([1.0, 0.0]), lb.PsdMatrix.diag([0.0, 1.0]))
    assert lb.is_dominated(t, lb.PsdMatrix.diag([1.0, 1.0])) is not None
    assert lb.is_dominated(lb.PsdMatrix.diag([0.0, 1.0]), t) is None

    lam = lb.Sequence.geometric(1.0, 0.5)
    T, S, cert = lb.theorem_b_instance(lam)
    assert close(S.sum(), 2.0)
    assert close(S.value(10) / T.value(10), 10.0, 1e-9)
    assert json.loads(cert)["kind"] == "unbounded"
    assert lb.diag_uniqueness(S, T) == (False, None)
    assert lb.diag_uniqueness(T, T) == (True, 1.0)

    est = lb.kvn_sup_estimate(lb.PsdMatrix.diag([1.0, 0.5, 0.25]), [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [1, 2, 3])
    assert all(close(a, b) for a, b in zip(est, [1.0, 1.5, 1.75])), est

    try:
        lb.PsdMatrix([[1.0, 2.0], [0.0, 1.0]])
    except ValueError as e:
        assert "Hermitian" in str(e)
    else:
        raise AssertionError("non-Hermitian input accepted")

    try:
        lb.theorem_b_instance(lb.Sequence([1.0, 2.0]))
    except ValueError as e:
        assert "finite-rank" in str(e)
    else:
        raise AssertionError("finite-rank input accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()

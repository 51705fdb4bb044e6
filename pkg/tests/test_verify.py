import csv
import io
import math

import numpy as np
import pytest

from simplex_neumann import ResourceLimit, Simplex, alcove_simplex, predicted_neumann_masses, standard_simplex
from simplex_neumann import verify
from simplex_neumann.verify import (
    CSV_FIELDS,
    random_simplex,
    reports_to_csv,
    thread_count,
    verify_exact,
    verify_fem,
)


@pytest.fixture(scope="module")
def triangle_study():
    return verify_fem(standard_simplex(2), levels=(2, 3, 4, 5), threads=1)


def test_exact_report_invariants():
    rep = verify_exact(2, (3, 1))
    assert rep.source == "exact-oracle" and rep.level is None and rep.mode == "3,1"
    s = Simplex.from_dict(rep.simplex)
    assert rep.predicted().tolist() == predicted_neumann_masses(s).tolist()
    assert np.all(rep.measured() >= 0)
    assert rep.max_residual < 1e-10


def test_standard_tetrahedron_predictions():
    p = predicted_neumann_masses(standard_simplex(3))
    np.testing.assert_allclose(p, [2 * math.sqrt(3), 2, 2, 2], rtol=1e-14)


def test_exact_far_below_fem(triangle_study):
    exact = verify_exact(2, (2, 1)).max_residual
    fem_best = min(r.max_residual for r in triangle_study.reports)
    assert exact * 1e4 < fem_best


def test_fem_report_fields(triangle_study):
    reps = triangle_study.reports
    assert [r.level for r in reps] == [2, 3, 4, 5]
    for r in reps:
        assert r.source == "fem" and r.gamma is None and r.timestamp is None
        assert r.predicted().tolist() == predicted_neumann_masses(standard_simplex(2)).tolist()
        assert np.all(r.measured() >= 0)
        assert all(f.raw_measured is None for f in r.faces)


def test_table_orders(triangle_study):
    t = triangle_study.table
    assert t.residuals.shape == (1, 4, 3)
    assert np.all(t.observed_orders()[0, 1:] >= 0.8)
    assert np.all(t.error_bars() > 0)
    np.testing.assert_allclose(t.observed_errors(), t.residuals[:, -1] * t.predicted)


def test_random_simplex_residuals_decrease():
    s = random_simplex(2, seed=11)
    study = verify_fem(s, levels=(3, 4, 5, 6), threads=2)
    r = study.table.residuals[0]
    assert np.all(r[1:] < r[:-1])


def test_gamma_reports_weighted_and_raw():
    gamma = np.array([[2.0, 0.5], [0.5, 1.0]])
    study = verify_fem(None, gamma, levels=(4, 5), threads=1)
    rep = study.reports[-1]
    assert rep.gamma == gamma.tolist()
    assert rep.max_residual < 0.03
    nu = np.array([1.0, 1.0]) / math.sqrt(2)
    slanted = rep.faces[0]
    assert slanted.raw_predicted == pytest.approx(slanted.predicted / (nu @ gamma @ nu))
    assert slanted.raw_measured == pytest.approx(slanted.raw_predicted, rel=0.03)


def test_clusters_flagged():
    assert verify._clusters([1.0, 1.0 + 1e-12, 2.0]) == [[0, 1], [2]]


def test_csv():
    text = reports_to_csv([verify_exact(2, (2, 1))])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_FIELDS
    assert [r["face"] for r in rows] == ["0", "1", "2"]
    assert float(rows[0]["predicted"]) == predicted_neumann_masses(alcove_simplex(2))[0]


def test_limits():
    with pytest.raises(ResourceLimit):
        verify_fem(standard_simplex(3), levels=(6, 7))
    with pytest.raises(ValueError):
        verify_fem(standard_simplex(2), levels=(4, 3))
    with pytest.raises(ValueError):
        verify_fem(standard_simplex(2), np.eye(3))


def test_thread_env(monkeypatch):
    monkeypatch.setenv(verify.THREADS_ENV, "3")
    assert thread_count() == 3
    monkeypatch.setenv(verify.THREADS_ENV, "0")
    assert thread_count() >= 1
    monkeypatch.setenv(verify.THREADS_ENV, "many")
    with pytest.raises(ValueError):
        thread_count()


def test_thread_count_does_not_change_results():
    a = verify_fem(standard_simplex(2), levels=(3, 4), threads=1)
    b = verify_fem(standard_simplex(2), levels=(3, 4), threads=4)
    assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in b.reports]


@pytest.mark.parametrize("n", [2, 3])
def test_random_simplex_quality(n):
    s = random_simplex(n, seed=5)
    assert s.dimension == n
    assert random_simplex(n, seed=5).vertices.tolist() == s.vertices.tolist()

"""Acceptance criteria at full trial counts and pinned tolerances.

Each test prints a ``[PASS]``/``[FAIL]`` line with its per-case detail so the
report is readable in ``pytest -v`` output. The whole module takes several
minutes on one core.
"""

import pytest

from relaysim import acceptance

SETTINGS = acceptance.Settings()


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    result = acceptance.CRITERIA[number](SETTINGS)
    with capsys.disabled():
        print()
        print(result.line())
        for line in result.details:
            print(f"    {line}")
    assert result.passed, "\n".join(result.details)


def test_settings_are_the_documented_tolerances():
    s = SETTINGS
    assert (s.diversity_tol, s.diversity_min_errors) == (0.3, 100)
    assert s.maxmin_tight_ratio == 1.15
    assert (s.advantage_target_db, s.advantage_tol_db, s.bnc_gap_tol_db) == (0.5, 0.3, 0.2)
    assert s.ratio_rel_tol == 0.05
    assert (s.mgf_samples, s.mgf_rel_tol) == (1000, 1e-10)
    assert s.diversity_analytic_tol == 0.05
    assert s.union_trials == 10**6
    assert (s.property_draws, s.power_tol) == (10**4, 1e-12)
    assert max(s.diversity_trials, s.agreement_trials, s.advantage_trials) <= 10**7

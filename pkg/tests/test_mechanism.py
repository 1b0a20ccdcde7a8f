import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.errors import DimensionError, DomainError
from app.services.mechanism import (
    BudgetPlan,
    TaxingRule,
    apply_taxation,
    efficient_flat_rate,
    efficient_rule,
    equilibrium_payoffs,
    exemptions_for_shares,
    flat_rate_payoffs,
    income_tax,
    is_efficient_rule,
    maxmin_exemptions,
    mechanism_constants,
    proportional_exemptions,
    redistribute,
    taxed_payoff_array,
    taxed_payoffs,
)


def test_income_tax_and_subsidy():
    rule = TaxingRule(exemptions=(1.0, 4.0), rates=(0.5, 0.5))
    assert_allclose(income_tax([3.0, 2.0], rule), [1.0, -1.0])


def test_redistribute_splits_other_taxes():
    assert_allclose(redistribute([1.0, 2.0, 3.0], BudgetPlan(1.0)), [2.5, 2.0, 1.5])
    assert_allclose(redistribute([1.0, 2.0, 3.0], BudgetPlan(0.5)), [1.25, 1.0, 0.75])


def test_prisoners_dilemma_cells_under_efficient_rule():
    rule = efficient_rule(2)
    plan = BudgetPlan()
    assert rule.rates == (0.5, 0.5)
    expected = {
        (2.0, 2.0): (2.0, 2.0),
        (0.0, 3.0): (1.5, 1.5),
        (3.0, 0.0): (1.5, 1.5),
        (1.0, 1.0): (1.0, 1.0),
    }
    for payoffs, taxed in expected.items():
        assert taxed_payoffs(payoffs, rule, plan).taxed_payoffs.tolist() == list(taxed)


def test_unequal_exemptions_shift_payoffs():
    rule = efficient_rule(2, exemptions=(0.0, 1.0))
    plan = BudgetPlan()
    assert_allclose(taxed_payoffs([2.0, 2.0], rule, plan).taxed_payoffs, [1.5, 2.5])
    assert_allclose(taxed_payoffs([0.0, 3.0], rule, plan).taxed_payoffs, [1.0, 2.0])
    assert_allclose(taxed_payoffs([1.0, 1.0], rule, plan).taxed_payoffs, [0.5, 1.5])


def test_platform_net_sign_follows_beta():
    rule = TaxingRule.flat(3, 0.4)
    u = [3.0, 1.0, 2.0]
    assert taxed_payoffs(u, rule, BudgetPlan(0.5)).platform_net > 0
    assert taxed_payoffs(u, rule, BudgetPlan(1.5)).platform_net < 0
    assert taxed_payoffs(u, rule, BudgetPlan(1.0)).platform_net == pytest.approx(0.0, abs=1e-15)


def test_taxation_algebra_randomized(rng):
    for _ in range(10_000):
        n = int(rng.integers(2, 11))
        u = rng.uniform(-10, 10, n)
        e = rng.uniform(0, 5, n)
        beta = float(rng.uniform(0.1, 2.0))
        rate = float(rng.uniform(0, 1))

        balanced = taxed_payoffs(u, TaxingRule.flat(n, rate, e), BudgetPlan())
        assert abs(balanced.taxed_payoffs.sum() - u.sum()) < 1e-12 * max(1.0, np.abs(u).sum())

        plan = BudgetPlan(beta)
        direct = taxed_payoffs(u, TaxingRule.flat(n, rate, e), plan).taxed_payoffs
        assert_allclose(flat_rate_payoffs(u, rate, e, plan), direct, rtol=0, atol=1e-12)

        rule = efficient_rule(n, plan, e)
        const = mechanism_constants(rule, plan)
        identity = const.c * u.sum() - const.c * const.delta + e
        assert_allclose(taxed_payoffs(u, rule, plan).taxed_payoffs, identity, rtol=0, atol=1e-12)


def test_taxed_payoff_array_matches_vector_form(rng):
    rule = TaxingRule(exemptions=(0.0, 0.5, 1.0), rates=(0.2, 0.5, 0.9))
    plan = BudgetPlan(0.8)
    tensor = rng.uniform(-1, 1, (2, 3, 4, 3))
    taxed = taxed_payoff_array(tensor, rule, plan)
    for index in np.ndindex(2, 3, 4):
        assert_allclose(taxed[index], taxed_payoffs(tensor[index], rule, plan).taxed_payoffs)


def test_efficient_flat_rate_values():
    assert efficient_flat_rate(2) == 0.5
    assert efficient_flat_rate(5) == pytest.approx(0.8)
    assert efficient_flat_rate(3, BudgetPlan(2.0)) == pytest.approx(0.5)
    assert is_efficient_rule(efficient_rule(4, BudgetPlan(0.7)), BudgetPlan(0.7))
    assert not is_efficient_rule(TaxingRule.flat(4, 0.5), BudgetPlan())


@pytest.mark.parametrize("exemptions, rates", [
    ((0.0, 0.0, 0.0), (0.5, 0.5)),
    ((0.0,), (0.5,)),
])
def test_rule_shape_errors(exemptions, rates):
    with pytest.raises((DimensionError, DomainError)):
        TaxingRule(exemptions=exemptions, rates=rates)


def test_rule_domain_errors():
    with pytest.raises(DomainError):
        TaxingRule.flat(2, 1.5)
    with pytest.raises(DomainError):
        BudgetPlan(0.0)
    with pytest.raises(DomainError):
        efficient_flat_rate(1)
    with pytest.raises(DimensionError):
        taxed_payoffs([1.0, 2.0, 3.0], TaxingRule.flat(2, 0.5), BudgetPlan())


def test_maxmin_exemptions_split_evenly():
    rule = efficient_rule(4, exemptions=maxmin_exemptions(4))
    assert_allclose(equilibrium_payoffs(10.0, rule, BudgetPlan()), [2.5] * 4)


def test_exemptions_for_shares_balanced():
    targets = [1.0, 2.0, 3.0, 4.0]
    e = exemptions_for_shares(targets, 10.0)
    assert sum(e) == pytest.approx(0.0, abs=1e-12)
    assert_allclose(equilibrium_payoffs(10.0, efficient_rule(4, exemptions=e), BudgetPlan()), targets)

    with pytest.raises(DomainError):
        exemptions_for_shares([1.0, 1.0], 10.0)


def test_exemptions_for_shares_unbalanced():
    plan = BudgetPlan(0.6)
    targets = [0.5, 1.5, 2.0]
    e = exemptions_for_shares(targets, 6.0, plan)
    assert_allclose(equilibrium_payoffs(6.0, efficient_rule(3, plan, e), plan), targets, atol=1e-12)


def test_proportional_exemptions():
    e = proportional_exemptions([1.0, 3.0], 8.0)
    assert_allclose(equilibrium_payoffs(8.0, efficient_rule(2, exemptions=e), BudgetPlan()), [2.0, 6.0])
    with pytest.raises(DomainError):
        proportional_exemptions([1.0, 0.0], 8.0)


def test_apply_taxation_wraps_callables():
    taxed = apply_taxation(lambda profile: [3.0, 0.0], efficient_rule(2), BudgetPlan())
    assert_allclose(taxed((1, 0)), [1.5, 1.5])
    with pytest.raises(TypeError):
        apply_taxation(42, efficient_rule(2), BudgetPlan())


def test_taxed_payoff_monotone_in_exemptions(rng):
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        u = rng.normal(0, 5, n)
        e = rng.normal(0, 2, n)
        plan = BudgetPlan(beta=float(rng.uniform(0.2, 2.0)))
        rate = float(rng.uniform(0.05, 1.0))
        before = taxed_payoffs(u, TaxingRule.flat(n, rate, e), plan).taxed_payoffs

        i = int(rng.integers(n))
        h = float(rng.uniform(0.01, 1.0))
        raised = e.copy()
        raised[i] += h
        after = taxed_payoffs(u, TaxingRule.flat(n, rate, raised), plan).taxed_payoffs

        assert after[i] - before[i] == pytest.approx(rate * h, abs=1e-12)
        others = np.arange(n) != i
        assert np.all(after[others] < before[others])
        assert_allclose(after[others] - before[others], -rate * plan.beta / (n - 1) * h, atol=1e-12)


def test_efficient_rule_orders_payoffs_by_exemptions(rng):
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        u = rng.normal(0, 5, n)
        e = rng.normal(0, 2, n)
        plan = BudgetPlan(beta=float(rng.uniform(0.2, 2.0)))
        taxed = taxed_payoffs(u, efficient_rule(n, plan, e), plan).taxed_payoffs
        assert_allclose(taxed[:, None] - taxed[None, :], e[:, None] - e[None, :], atol=1e-10)
        assert list(np.argsort(taxed, kind="stable")) == list(np.argsort(e, kind="stable"))

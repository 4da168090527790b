import numpy as np
import pytest
from hypothesis import given, strategies as st

from threepass.qmath import binary_entropy
from threepass.secrate import (
    EFFICIENCY_PRESETS,
    BracketError,
    EfficiencyInputs,
    cabello_efficiency,
    find_threshold,
    golden_section_max,
    holevo_chi,
    key_rate_sb1,
    key_rate_sifted,
    lower_bound_rate,
    lower_bound_threshold,
    optimize_preprocessing,
    upper_bound_crossing,
    upper_bound_rate,
    upper_bound_threshold,
)

# 40-digit evaluations of the defining expressions, frozen.
ROOT_SB1 = 0.0311244603047894
ROOT_SB1_ANNOUNCED = 0.0614904700787242
ROOT_SIFTED = 0.0229698402967669
ROOT_SIFTED_ANNOUNCED = 0.0485152401087486
RATE_SIFTED_AT_ZERO = 0.34997757835164578
LOWER_AT_0P05_Q0 = 0.42720608576808774
LOWER_AT_0P1_Q0P1 = 0.06269436857898337
CHI_AT_0P1_Q0P1 = 0.26934859765218252
UPPER_AT_0P1_Q0P1 = 0.58927155192390268
CROSSING_AT_0P1_Q0P1 = 0.050574356619537638


def test_key_rate_sb1_limit_at_zero():
    assert key_rate_sb1(0.0, False) == pytest.approx(0.5, abs=1e-12)
    assert key_rate_sb1(0.0, True) == pytest.approx(0.5, abs=1e-12)


def test_key_rate_sb1_roots():
    assert find_threshold(lambda e: key_rate_sb1(e, False), 1e-4, 0.45, 1e-9) == \
        pytest.approx(ROOT_SB1, abs=1e-7)
    assert find_threshold(lambda e: key_rate_sb1(e, True), 1e-4, 0.45, 1e-9) == \
        pytest.approx(ROOT_SB1_ANNOUNCED, abs=1e-7)


def test_key_rate_sifted_value_at_zero():
    assert key_rate_sifted(0.0, False) == pytest.approx(RATE_SIFTED_AT_ZERO, abs=1e-9)
    assert key_rate_sifted(0.0, False) == pytest.approx(
        1 - binary_entropy(1 / 6), abs=1e-12)


def test_key_rate_sifted_roots():
    assert find_threshold(lambda e: key_rate_sifted(e, False), 1e-4, 0.45, 1e-9) == \
        pytest.approx(ROOT_SIFTED, abs=1e-7)
    assert find_threshold(lambda e: key_rate_sifted(e, True), 1e-4, 0.45, 1e-9) == \
        pytest.approx(ROOT_SIFTED_ANNOUNCED, abs=1e-7)


def test_key_rates_monotone_decreasing():
    for fn, root in ((lambda e: key_rate_sb1(e, False), ROOT_SB1),
                     (lambda e: key_rate_sb1(e, True), ROOT_SB1_ANNOUNCED),
                     (lambda e: key_rate_sifted(e, False), ROOT_SIFTED),
                     (lambda e: key_rate_sifted(e, True), ROOT_SIFTED_ANNOUNCED)):
        grid = np.linspace(1e-3, root + 0.1, 60)
        vals = [fn(float(e)) for e in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_announcement_never_lowers_rate():
    for e in np.linspace(0.0, 0.5, 26):
        e = float(e)
        assert key_rate_sb1(e, True) >= key_rate_sb1(e, False) - 1e-12
        assert key_rate_sifted(e, True) >= key_rate_sifted(e, False) - 1e-12
        # the gap is exactly h(e)
        assert key_rate_sb1(e, True) - key_rate_sb1(e, False) == pytest.approx(
            binary_entropy(e), abs=1e-12)


def test_both_sifted_rates_negative_above_15_percent():
    for e in np.linspace(0.15, 0.45, 13):
        assert key_rate_sifted(float(e), False) < 0
        assert key_rate_sifted(float(e), True) < 0


def test_find_threshold_linear():
    assert find_threshold(lambda e: 0.1 - e, 0.0, 0.4, 1e-9) == \
        pytest.approx(0.1, abs=1e-8)


def test_find_threshold_bracket_error():
    with pytest.raises(BracketError):
        find_threshold(lambda e: 1.0, 0.0, 0.4)
    with pytest.raises(BracketError):
        find_threshold(lambda e: -1.0, 0.0, 0.4)
    with pytest.raises(ValueError):
        find_threshold(lambda e: 0.1 - e, 0.0, 0.4, tol=0.0)


def test_lower_bound_rate_zero_at_half():
    for e in (0.01, 0.1, 0.3):
        assert lower_bound_rate(e, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_lower_bound_rate_no_preprocessing_identity():
    # With q = 0 the conditional states are pure-block rank-2 and the rate
    # collapses to 1 - 2 h(e): an independent closed form.
    for e in (0.02, 0.05, 0.11, 0.2):
        assert lower_bound_rate(e, 0.0) == pytest.approx(
            1 - 2 * binary_entropy(e), abs=1e-9)
    assert lower_bound_rate(0.05, 0.0) == pytest.approx(LOWER_AT_0P05_Q0, abs=1e-9)


def test_lower_bound_rate_frozen_value():
    assert lower_bound_rate(0.1, 0.1) == pytest.approx(LOWER_AT_0P1_Q0P1, abs=1e-9)


@given(
    st.floats(min_value=1e-3, max_value=0.45, allow_nan=False),
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
)
def test_bound_rates_q_symmetry(e, q):
    assert lower_bound_rate(e, q) == pytest.approx(
        lower_bound_rate(e, 1.0 - q), abs=1e-9)
    assert upper_bound_rate(e, q) == pytest.approx(
        upper_bound_rate(e, 1.0 - q), abs=1e-9)


def test_holevo_chi_vanishes_at_zero_error():
    for q in (0.0, 0.2, 0.5):
        assert holevo_chi(0.0, q) == pytest.approx(0.0, abs=1e-12)


def test_holevo_chi_vanishes_at_balanced_flip():
    for e in (0.05, 0.15, 0.3):
        assert holevo_chi(e, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_holevo_chi_nonnegative():
    for e in np.linspace(0.0, 0.45, 10):
        for q in np.linspace(0.0, 1.0, 9):
            assert holevo_chi(float(e), float(q)) >= -1e-12


def test_holevo_chi_frozen_value():
    assert holevo_chi(0.1, 0.1) == pytest.approx(CHI_AT_0P1_Q0P1, abs=1e-9)


def test_upper_bound_rate_decomposition():
    assert upper_bound_rate(0.1, 0.1) == pytest.approx(UPPER_AT_0P1_Q0P1, abs=1e-9)
    assert upper_bound_crossing(0.1, 0.1) == pytest.approx(
        CROSSING_AT_0P1_Q0P1, abs=1e-9)
    # Published form = chi + (1 - h); crossing = (1 - h) - chi.
    e, q = 0.17, 0.23
    h = binary_entropy(q * (1 - e) + (1 - q) * e)
    assert upper_bound_rate(e, q) == pytest.approx(
        holevo_chi(e, q) + 1 - h, abs=1e-12)
    assert upper_bound_crossing(e, q) == pytest.approx(
        (1 - h) - holevo_chi(e, q), abs=1e-12)


def test_upper_bound_rate_is_nonnegative_everywhere():
    # Sum of a Holevo quantity and a mutual information: no zero crossing
    # in e exists, which is why thresholds use upper_bound_crossing.
    for e in np.linspace(0.0, 0.45, 10):
        for q in np.linspace(0.0, 0.5, 6):
            assert upper_bound_rate(float(e), float(q)) >= -1e-12


def test_upper_bound_rate_at_balanced_flip_equals_chi():
    for e in (0.05, 0.2):
        assert upper_bound_rate(e, 0.5) == pytest.approx(
            holevo_chi(e, 0.5), abs=1e-12)


def test_bound_thresholds():
    # No ordering between the two is asserted: the published pair is already
    # inverted (0.114 < 0.124) relative to the usual upper/lower reading.
    e_low, q_low = lower_bound_threshold()
    assert e_low == pytest.approx(0.124120, abs=2e-4)
    assert q_low > 0.45  # supremum approached toward q = 1/2
    e_up, _ = upper_bound_threshold()
    assert e_up == pytest.approx(0.120137, abs=2e-4)


def test_bound_threshold_mu4_override_changes_result():
    e_default, _ = lower_bound_threshold()
    e_zero, _ = lower_bound_threshold(mu4=0.0)
    assert e_zero != pytest.approx(e_default, abs=1e-3)


def test_optimize_preprocessing_positive_below_threshold():
    q_star, r_star = optimize_preprocessing(lower_bound_rate, 0.05)
    assert r_star > 0
    # golden-section result beats or matches a dense grid
    grid_best = max(lower_bound_rate(0.05, float(q)) for q in np.linspace(0, 0.5, 501))
    assert r_star >= grid_best - 1e-6
    # still positive anywhere below the published upper figure
    for e in (0.1, 0.11, 0.113):
        assert optimize_preprocessing(lower_bound_rate, e)[1] > 0


def test_optimize_preprocessing_negative_above_threshold():
    _, r_star = optimize_preprocessing(lower_bound_rate, 0.2)
    assert r_star < 0
    grid = [lower_bound_rate(0.2, float(q)) for q in np.linspace(0, 0.4999, 501)]
    assert max(grid) < 0


def test_optimize_preprocessing_constant_function():
    q_star, r_star = optimize_preprocessing(lambda e, q: 0.375, 0.1)
    assert r_star == 0.375
    assert 0.0 <= q_star <= 0.5


def test_golden_section_max_quadratic():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, tol=1e-8)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-10)


def test_rate_domain_errors():
    with pytest.raises(ValueError):
        key_rate_sb1(0.6)
    with pytest.raises(ValueError):
        key_rate_sifted(-0.1)
    with pytest.raises(ValueError):
        lower_bound_rate(0.1, 1.5)
    with pytest.raises(ValueError):
        holevo_chi(0.1, -0.2)


def test_cabello_efficiency_presets():
    assert cabello_efficiency(EFFICIENCY_PRESETS["p1"]) == pytest.approx(
        0.75 / 3.625, abs=1e-12)
    assert round(cabello_efficiency(EFFICIENCY_PRESETS["p1"]), 4) == 0.2069
    assert cabello_efficiency(EFFICIENCY_PRESETS["p2"]) == pytest.approx(0.25, abs=1e-12)
    assert cabello_efficiency(EFFICIENCY_PRESETS["sarg04"]) == pytest.approx(
        0.125, abs=1e-12)


def test_cabello_efficiency_custom():
    assert cabello_efficiency(EfficiencyInputs(1.0, 1.0, 1.0)) == pytest.approx(0.5)
    assert cabello_efficiency(EfficiencyInputs(0.25, 1.0, 1.0)) == pytest.approx(0.125)


def test_efficiency_inputs_validation():
    with pytest.raises(ValueError):
        EfficiencyInputs(b_s=0.5, q_t=0.0, b_t=1.0)
    with pytest.raises(ValueError):
        EfficiencyInputs(b_s=-0.5, q_t=1.0, b_t=1.0)

import math
import random

from stepelicit.oracle import FIRST, INDIFFERENT, SECOND, OracleUser, respond, sample_oracle


def test_weights_within_range():
    for seed in range(50):
        user = sample_oracle(seed)
        assert len(user.w_star) == 12
        assert all(0.01 <= w <= 100.0 for w in user.w_star)


def test_log_weights_roughly_uniform():
    # pool many draws and compare the empirical CDF of log10(w) at a few
    # quantiles against the uniform on [-2, 2]
    samples = []
    for seed in range(2000):
        samples.extend(math.log10(w) for w in sample_oracle(seed).w_star)
    n = len(samples)
    samples.sort()
    for q in (0.1, 0.25, 0.5, 0.75, 0.9):
        x = -2.0 + 4.0 * q
        emp = sum(1 for s in samples if s <= x) / n
        se = math.sqrt(q * (1 - q) / n)
        assert abs(emp - q) < 5 * se, (q, emp)


def test_equal_utility_always_indifferent():
    user = sample_oracle(3)
    phi = (1.0,) * 12
    for _ in range(100):
        assert respond(user, phi, phi) == INDIFFERENT


def test_huge_gap_never_indifferent():
    user = OracleUser(w_star=(1.0,) * 12, mislabel_rate=0.0, rng=random.Random(1))
    lo = (0.0,) * 12
    hi = (100.0,) * 12
    for _ in range(200):
        assert respond(user, lo, hi) == FIRST
        assert respond(user, hi, lo) == SECOND


def test_label_rates_match_model():
    # gap 0.5 under unit weights: indifferent with prob e^-0.5, correct label
    # with prob (1 - e^-0.5) * 0.9
    user = OracleUser(w_star=(1.0,) + (0.0,) * 11, rng=random.Random(42))
    phi_lo = (1.0,) + (0.0,) * 11
    phi_hi = (1.5,) + (0.0,) * 11
    n = 10_000
    counts = {INDIFFERENT: 0, FIRST: 0, SECOND: 0}
    for _ in range(n):
        counts[respond(user, phi_lo, phi_hi)] += 1
    p_ind = math.exp(-0.5)
    p_first = (1 - p_ind) * 0.9
    p_second = (1 - p_ind) * 0.1
    for label, p in ((INDIFFERENT, p_ind), (FIRST, p_first), (SECOND, p_second)):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(counts[label] / n - p) < 3 * se, (label, counts[label] / n, p)


def test_response_symmetry():
    # swapping the pair swaps the label frequencies
    a = (2.0,) + (0.0,) * 11
    b = (2.4,) + (0.0,) * 11
    n = 8000
    fwd = {INDIFFERENT: 0, FIRST: 0, SECOND: 0}
    rev = {INDIFFERENT: 0, FIRST: 0, SECOND: 0}
    u1 = OracleUser(w_star=(1.0,) * 12, rng=random.Random(7))
    u2 = OracleUser(w_star=(1.0,) * 12, rng=random.Random(7))
    for _ in range(n):
        fwd[respond(u1, a, b)] += 1
        rev[respond(u2, b, a)] += 1
    assert fwd[INDIFFERENT] == rev[INDIFFERENT]  # identical rng draws
    assert fwd[FIRST] == rev[SECOND]
    assert fwd[SECOND] == rev[FIRST]


def test_determinism_per_seed():
    a = (1.0, 2.0) + (0.0,) * 10
    b = (2.0, 1.0) + (0.0,) * 10
    r1 = [respond(sample_oracle(9), a, b) for _ in range(1)]
    r2 = [respond(sample_oracle(9), a, b) for _ in range(1)]
    assert r1 == r2

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mps_rescale.grid import CategoricalGrid, GridGeometry
from mps_rescale.patterns import (
    LOG_ODDS_CLIP,
    TEMPLATES,
    FOPCurve,
    PatternHistogram,
    Template,
    decode_pattern,
    fop,
    fop_curve,
    fop_rand,
    fop_rand_vector,
    log_odds,
    odds_ratio,
    order_of_structure,
    pattern_code,
    scan,
    sfop,
    write_fop_csv,
    write_order_csv,
)

from oracles import brute_pattern_counts, brute_placements


def grid_of(vals2d, k=2):
    vals2d = np.asarray(vals2d)
    ny, nx = vals2d.shape
    return CategoricalGrid(GridGeometry(nx, ny), k, vals2d)


def checkerboard(n=8):
    ys, xs = np.mgrid[0:n, 0:n]
    return grid_of((xs + ys) % 2)


# ---------------------------------------------------------------------------
# Templates and codes
# ---------------------------------------------------------------------------

def test_template_validation():
    with pytest.raises(ValueError, match="first template offset"):
        Template("t", ((1, 0), (0, 0)))
    with pytest.raises(ValueError, match="distinct"):
        Template("t", ((0, 0), (1, 0), (1, 0)))
    with pytest.raises(ValueError):
        Template("t", ((0, 0),))


def test_preset_shapes():
    assert TEMPLATES["2x2"].offsets == ((0, 0), (1, 0), (0, 1), (1, 1))
    assert TEMPLATES["2x3"].n == 6
    assert TEMPLATES["3x3"].n == 9


def test_pattern_code_worked_example():
    # x-fastest template order: digit j carries weight k^j
    assert pattern_code([1, 0, 1, 1], 2) == 13


def test_code_bijection_exhaustive():
    for k, n in [(2, 4), (3, 3)]:
        seen = set()
        for code in range(k**n):
            digits = decode_pattern(code, k, n)
            assert pattern_code(digits, k) == code
            seen.add(digits)
        assert len(seen) == k**n


@given(st.integers(2, 5), st.lists(st.integers(0, 4), min_size=2, max_size=8))
def test_code_round_trip_property(k, digits):
    digits = [d % k for d in digits]
    code = pattern_code(digits, k)
    assert list(decode_pattern(code, k, len(digits))) == digits


def test_pattern_code_range_check():
    with pytest.raises(ValueError):
        pattern_code([0, 2], 2)


# ---------------------------------------------------------------------------
# Scanning
# ---------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(
    nx=st.integers(6, 14),
    ny=st.integers(6, 14),
    k=st.integers(2, 3),
    lag=st.integers(1, 3),
    name=st.sampled_from(["2x2", "2x3", "3x3"]),
    seed=st.integers(0, 10**6),
)
def test_scan_matches_brute_force(nx, ny, k, lag, name, seed):
    tmpl = TEMPLATES[name]
    rng = np.random.default_rng(seed)
    g = grid_of(rng.integers(0, k, size=(ny, nx)), k=k)
    span_x = max(dx for dx, _ in tmpl.offsets) * lag
    span_y = max(dy for _, dy in tmpl.offsets) * lag
    if span_x >= nx or span_y >= ny:
        with pytest.raises(ValueError, match="fit"):
            scan(g, tmpl, lag)
        return
    hist = scan(g, tmpl, lag)
    expect = brute_pattern_counts(g.values2d, k, tmpl.offsets, lag)
    assert np.array_equal(hist.counts, expect)
    assert hist.total == brute_placements((ny, nx), tmpl.offsets, lag)


def test_scan_checkerboard_codes():
    hist = scan(checkerboard(), TEMPLATES["2x2"], 1)
    present = np.flatnonzero(hist.counts)
    assert present.tolist() == [6, 9]


def test_scan_lag_skips_border():
    g = grid_of(np.zeros((5, 5), dtype=int))
    hist = scan(g, TEMPLATES["2x2"], 4)
    assert hist.total == 1
    assert hist.counts[0] == 1


def test_histogram_marginals_pool_template_cells():
    g = grid_of([[0, 1, 1], [1, 1, 0], [0, 0, 1]])
    hist = scan(g, TEMPLATES["2x2"], 1)
    # decode-weighted tally over extracted windows
    tally = np.zeros(2)
    for code, c in enumerate(hist.counts):
        if c:
            for digit in decode_pattern(code, hist.k, hist.n):
                tally[digit] += c
    assert np.allclose(hist.marginals, tally / tally.sum())


def test_histogram_validation():
    with pytest.raises(ValueError):
        PatternHistogram(2, 4, np.zeros(15, dtype=np.int64))
    with pytest.raises(ValueError):
        PatternHistogram(2, 4, -np.ones(16, dtype=np.int64))


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def test_fop_rand_worked_examples():
    # 3 of the majority with marginal 0.6, one minority at 0.4
    code = pattern_code([1, 1, 1, 0], 2)
    assert fop_rand([0.4, 0.6], code, 4) == pytest.approx(0.0864, abs=1e-15)
    assert fop_rand([0.5, 0.5], code, 4) == pytest.approx(0.0625, abs=1e-15)
    reverse = pattern_code([0, 0, 0, 1], 2)
    assert fop_rand([0.4, 0.6], reverse, 4) == pytest.approx(0.0384, abs=1e-15)


def test_fop_rand_vector_agrees_and_sums_to_one():
    p = [0.2, 0.5, 0.3]
    vec = fop_rand_vector(p, 3, 3)
    assert vec.size == 27
    assert vec.sum() == pytest.approx(1.0)
    for code in (0, 13, 26):
        assert vec[code] == pytest.approx(fop_rand(p, code, 3))


def test_fop_normalizes_counts():
    hist = scan(checkerboard(), TEMPLATES["2x2"], 1)
    f = fop(hist)
    assert f.sum() == pytest.approx(1.0)
    assert f[6] == pytest.approx(hist.counts[6] / hist.total)


def test_sfop_definition():
    hist = scan(checkerboard(6), TEMPLATES["2x2"], 1)
    s = sfop(hist)
    f = fop(hist)
    fr = fop_rand_vector(hist.marginals, 2, 4)
    nz = f > 0
    assert np.allclose(s[nz], f[nz] / fr[nz])
    assert np.all(s[~nz] == 0.0)


def test_sfop_inconsistent_marginals():
    hist = scan(checkerboard(6), TEMPLATES["2x2"], 1)
    with pytest.raises(ValueError, match="inconsistent"):
        sfop(hist, marginals=[1.0, 0.0])


def test_odds_ratio_certainty_error():
    g = grid_of(np.zeros((4, 4), dtype=int))
    hist = scan(g, TEMPLATES["2x2"], 1)
    with pytest.raises(ValueError, match="certainty"):
        odds_ratio(hist, marginals=[0.9, 0.1])


def test_odds_ratio_absent_category_is_neutral():
    # category 2 never occurs: every code touching it has fop = fop_rand = 0
    g = grid_of([[0, 1, 0], [1, 0, 1], [0, 1, 0]], k=3)
    hist = scan(g, TEMPLATES["2x2"], 1)
    ratio = fop_rand_vector(hist.marginals, 3, 4)
    dead = ratio == 0.0
    assert dead.any()
    r = odds_ratio(hist)
    assert np.all(r[dead] == 1.0)


def test_log_odds_clipping_and_zero():
    hist = scan(checkerboard(), TEMPLATES["2x2"], 1)
    lo = log_odds(hist)
    assert np.all(lo <= LOG_ODDS_CLIP) and np.all(lo >= -LOG_ODDS_CLIP)
    # absent patterns with positive independence odds pin to the floor
    assert lo[0] == -LOG_ODDS_CLIP
    r = odds_ratio(hist)
    mid = (r > 0) & (np.abs(np.log(np.where(r > 0, r, 1.0))) < LOG_ODDS_CLIP)
    assert np.allclose(lo[mid], np.log(r[mid]))


def test_order_of_structure_bounds():
    rand = CategoricalGrid(
        GridGeometry(64, 64), 2,
        np.random.default_rng(5).integers(0, 2, size=(64, 64)),
    )
    low = order_of_structure(scan(rand, TEMPLATES["2x2"], 1))
    high = order_of_structure(scan(checkerboard(16), TEMPLATES["2x2"], 1))
    assert low < 0.5 < high


def test_relabeling_symmetry():
    rng = np.random.default_rng(11)
    vals = rng.integers(0, 2, size=(20, 20))
    a = scan(grid_of(vals), TEMPLATES["2x2"], 1)
    b = scan(grid_of(1 - vals), TEMPLATES["2x2"], 1)
    # swapping the two labels complements every code (k=2, n=4)
    assert np.array_equal(b.counts, a.counts[::-1])
    assert np.allclose(sfop(b), sfop(a)[::-1])


# ---------------------------------------------------------------------------
# Curves and serialization
# ---------------------------------------------------------------------------

def test_fop_curve_validation(disk200):
    t = TEMPLATES["2x2"]
    with pytest.raises(ValueError):
        fop_curve(disk200, t, [])
    with pytest.raises(ValueError, match="ascending"):
        fop_curve(disk200, t, [2, 1])
    with pytest.raises(ValueError, match=">= 1"):
        fop_curve(disk200, t, [0, 1])
    with pytest.raises(ValueError, match="marginal source"):
        fop_curve(disk200, t, [1], marginal_source="local")


def test_fop_curve_at_and_orders(disk200):
    curve = fop_curve(disk200, TEMPLATES["2x2"], [1, 5, 10])
    assert curve.lags == (1, 5, 10)
    assert curve.at(5).lag == 5
    assert curve.orders().shape == (3,)
    with pytest.raises(KeyError):
        curve.at(7)


def test_global_marginals_option():
    g = grid_of(np.random.default_rng(3).integers(0, 2, size=(30, 30)))
    ext = fop_curve(g, TEMPLATES["2x2"], [8])
    glo = fop_curve(g, TEMPLATES["2x2"], [8], marginal_source="global")
    assert glo.marginal_source == "global"
    assert not np.allclose(ext.at(8).marginals, glo.at(8).marginals)
    from mps_rescale.grid import proportions
    assert np.allclose(glo.at(8).marginals, proportions(g))


def test_fop_csv_round_trip(tmp_path, disk200):
    curve = fop_curve(disk200, TEMPLATES["2x2"], [1, 2])
    path = tmp_path / "fop.csv"
    write_fop_csv(curve, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 16
    assert set(rows[0]) == {
        "lag", "pattern_code", "count", "fop", "fop_rand", "sfop",
        "odds_ratio", "log_odds",
    }
    st1 = curve.at(1)
    for row in rows:
        if row["lag"] == "1":
            code = int(row["pattern_code"])
            assert int(row["count"]) == st1.hist.counts[code]
            assert float(row["fop"]) == pytest.approx(st1.fop[code], rel=1e-9)
            assert float(row["log_odds"]) == pytest.approx(
                st1.log_odds[code], rel=1e-9, abs=1e-9
            )


def test_order_csv_round_trip(tmp_path, disk200):
    curve = fop_curve(disk200, TEMPLATES["3x3"], [1, 3])
    path = tmp_path / "order.csv"
    write_order_csv(curve, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["lag"]) for r in rows] == [1, 3]
    assert float(rows[0]["order_of_structure"]) == pytest.approx(
        curve.at(1).order, rel=1e-9
    )

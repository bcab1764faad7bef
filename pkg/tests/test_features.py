import warnings
from datetime import date

import numpy as np
import pytest

from epfbench.features import (
    CALENDAR_FIELDS,
    FeatureError,
    FeatureMatrix,
    FeatureSpec,
    Lag,
    Period,
    apply_scaler,
    backward_eliminate,
    build_features,
    correlation_report,
    fit_scaler,
    pearson_corr,
    write_correlation_report,
)
from epfbench.ingest import AlignedDataset
from epfbench.models import OlsSpec, fit


def ramp_dataset(days=14):
    n = 24 * days
    return AlignedDataset(
        date(2020, 1, 1),
        {
            "dam_price": np.arange(n, dtype=float),
            "total_demand": 1000.0 + np.arange(n),
            "wind_speed_dublin_airport": np.full(n, 10.0),
            "wind_speed_mace_head": np.full(n, 20.0),
        },
    )


def test_standard_feature_set():
    spec = FeatureSpec.standard()
    names = spec.column_names
    assert len(names) == 26
    assert names[-4:] == list(CALENDAR_FIELDS)
    for lag in ("dam_price_lag24", "dam_price_lag48", "dam_price_lag168", "total_demand_lag24", "total_demand_lag168"):
        assert lag in names
    assert "dam_price" not in names
    assert spec.max_lag == 168


def test_feature_spec_validation():
    with pytest.raises(FeatureError, match="target"):
        FeatureSpec(base=("dam_price",))
    with pytest.raises(FeatureError):
        Lag("dam_price", 0)
    with pytest.raises(FeatureError, match="duplicate"):
        FeatureSpec(base=("a", "a"))
    with pytest.raises(FeatureError, match="calendar"):
        FeatureSpec(calendar=("hour_of_week",))


def test_lags_are_positional():
    ds = ramp_dataset()
    spec = FeatureSpec(base=("total_demand",), lags=(Lag("dam_price", 24), Lag("dam_price", 168)))
    m = build_features(ds, spec, date(2020, 1, 8), date(2020, 1, 9))
    assert len(m) == 48
    assert np.array_equal(m.y, np.arange(168.0, 216.0))
    assert np.array_equal(m.column("dam_price_lag24"), m.y - 24)
    assert np.array_equal(m.column("dam_price_lag168"), m.y - 168)
    assert m.dates[0] == np.datetime64("2020-01-08") and m.hours[25] == 1


def test_insufficient_history_names_date():
    ds = ramp_dataset()
    spec = FeatureSpec(lags=(Lag("dam_price", 168),))
    with pytest.raises(FeatureError, match="2019-12-31"):
        build_features(ds, spec, date(2020, 1, 7), date(2020, 1, 7))
    with pytest.raises(FeatureError, match="after the dataset end"):
        build_features(ds, FeatureSpec(base=("total_demand",)), date(2020, 1, 1), date(2020, 2, 1))


def test_missing_dataset_column():
    with pytest.raises(FeatureError, match="snsp"):
        build_features(ramp_dataset(), FeatureSpec(base=("snsp",)), date(2020, 1, 1), date(2020, 1, 2))


def test_calendar_and_wind_average():
    ds = ramp_dataset()
    spec = FeatureSpec(calendar=CALENDAR_FIELDS, wind_average=("wind_speed_dublin_airport", "wind_speed_mace_head"))
    m = build_features(ds, spec, date(2020, 1, 1), date(2020, 1, 6))
    assert set(m.column("year")) == {2020.0}
    assert m.column("day_of_year")[24 * 5] == 6.0
    # 2020-01-01 falls in ISO week 1
    assert m.column("week")[0] == 1.0
    assert np.all(m.column("wind_speed_average") == 15.0)


def test_feature_matrix_split_and_select(rng):
    m = FeatureMatrix.from_arrays(rng.normal(size=(100, 3)), rng.normal(size=100))
    a, b = m.split_tail(0.2)
    assert (len(a), len(b)) == (80, 20)
    assert np.array_equal(b.y, m.y[80:])
    assert m.select(["x2", "x0"]).columns == ("x2", "x0")
    with pytest.raises(FeatureError):
        m.select(["nope"])
    with pytest.raises(FeatureError):
        FeatureMatrix.from_arrays(np.array([[np.nan]]), [1.0])


def test_scaler_fits_train_only(rng):
    train = FeatureMatrix.from_arrays(rng.normal(3, 2, size=(200, 2)), rng.normal(size=200))
    test = FeatureMatrix.from_arrays(rng.normal(50, 9, size=(40, 2)), rng.normal(size=40))
    state = fit_scaler(train)
    z = apply_scaler(state, train)
    assert np.allclose(z.X.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(z.X.std(axis=0, ddof=1), 1, atol=1e-12)
    zt = apply_scaler(state, test)
    assert np.allclose(zt.X, (test.X - train.X.mean(0)) / train.X.std(0, ddof=1))
    assert np.array_equal(zt.y, test.y)
    assert np.allclose(state.invert(zt).X, test.X)


def test_scaler_drops_constant_columns(rng):
    X = np.column_stack([rng.normal(size=50), np.full(50, 2020.0)])
    m = FeatureMatrix.from_arrays(X, rng.normal(size=50), ["a", "year"])
    with pytest.warns(UserWarning, match="year"):
        state = fit_scaler(m)
    assert state.dropped == ("year",)
    assert apply_scaler(state, m).columns == ("a",)


def test_scaler_column_mismatch(rng):
    m = FeatureMatrix.from_arrays(rng.normal(size=(10, 2)), rng.normal(size=10), ["a", "b"])
    other = FeatureMatrix.from_arrays(rng.normal(size=(10, 2)), rng.normal(size=10), ["a", "c"])
    with pytest.raises(FeatureError, match="mismatch"):
        apply_scaler(fit_scaler(m), other)


def test_pearson_matches_numpy(rng):
    for _ in range(20):
        x, y = rng.normal(size=50), rng.normal(size=50)
        assert pearson_corr(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
    assert pearson_corr([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pearson_corr([1, 1, 1], [1, 2, 3])


def test_correlation_report(small_dataset, tmp_path):
    periods = [Period("jan", date(2020, 1, 1), date(2020, 1, 31)), Period("feb", date(2020, 2, 1), date(2020, 2, 29))]
    data = small_dataset.with_column("flat", np.ones(small_dataset.n_rows))
    with pytest.warns(UserWarning, match="flat"):
        table = correlation_report(data, ["dam_price", "eu_gas_price", "flat"], periods=periods)
    assert list(table.columns) == ["jan", "feb"]
    assert np.allclose(table.loc["dam_price"], 1.0)
    assert table.loc["flat"].isna().all()
    path = write_correlation_report(table, tmp_path / "pcc.csv")
    assert "undefined" in path.read_text()
    one = correlation_report(small_dataset, ["eu_gas_price"], periods=periods[:1])
    assert one.shape == (1, 1)


def _planted(rng, n=600):
    X = rng.normal(size=(n, 5))
    y = 3 * X[:, 0] - 2 * X[:, 1] + 1.5 * X[:, 2] + 0.1 * rng.normal(size=n)
    m = FeatureMatrix.from_arrays(X, y, ["s0", "s1", "s2", "noise_a", "noise_b"])
    return m.split_tail(0.25)


def test_backward_elimination_removes_noise(rng):
    train, val = _planted(rng)
    result = backward_eliminate(lambda m: fit(OlsSpec(), m), train, val)
    assert set(result.selected) <= {"s0", "s1", "s2", "noise_a", "noise_b"}
    assert {"s0", "s1", "s2"} <= set(result.selected)
    trail = result.trail_frame()
    assert result.best_mae == trail["mae"].min()
    assert trail["n_features"].tolist() == [5, 4, 3, 2, 1]
    assert trail["removed"].iloc[0] is None


def test_backward_elimination_planted_noise_absent():
    # small training set, large validation set: fitted noise coefficients cost validation MAE
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(3060, 4))
        y = 2 * X[:, 0] + X[:, 1] + 0.5 * rng.normal(size=3060)
        m = FeatureMatrix.from_arrays(X, y, ["s0", "s1", "n0", "n1"])
        result = backward_eliminate(lambda mm: fit(OlsSpec(), mm), m.rows(slice(0, 60)), m.rows(slice(60, None)))
        assert {"s0", "s1"} <= set(result.selected)
        hits += set(result.selected) == {"s0", "s1"}
    assert hits >= 16


def test_backward_elimination_deterministic_and_patience(rng):
    train, val = _planted(rng)
    trainer = lambda m: fit(OlsSpec(), m)  # noqa: E731
    a = backward_eliminate(trainer, train, val)
    b = backward_eliminate(trainer, train, val)
    assert a == b
    short = backward_eliminate(trainer, train, val, patience=1)
    assert len(short.trail) <= len(a.trail)


def test_backward_elimination_needs_coefficients(rng):
    train, val = _planted(rng)

    class Opaque:
        def predict(self, m):
            return np.zeros(len(m))

    with pytest.raises(FeatureError, match="coefficients"):
        backward_eliminate(lambda m: Opaque(), train, val)

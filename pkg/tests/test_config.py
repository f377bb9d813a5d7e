import pytest

from bikeflow.config import RunConfig, resolve_seed
from bikeflow.errors import UsageError
from bikeflow.preprocess import ServiceWindow


def test_defaults():
    c = RunConfig()
    assert c.route_threshold == 0.03 and c.median_window == 3
    assert c.morning_window == ServiceWindow(300, 720)


def test_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nmedian_window = 5\nmorning_window = 06:00-11:00\nroute_threshold=0.05\n")
    c = RunConfig.from_file(p)
    assert c.median_window == 5 and c.route_threshold == 0.05
    assert c.morning_window == ServiceWindow(360, 660)


@pytest.mark.parametrize("values", [{"median_window": "4"}, {"route_threshold": "1.5"},
                                    {"k_min": "1"}, {"bogus": "1"}, {"meta_k": "x"},
                                    {"service_window": "12:00-05:00"}])
def test_rejects_bad_values(values):
    with pytest.raises(UsageError):
        RunConfig.from_mapping(values)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("no equals sign here\n")
    with pytest.raises(UsageError):
        RunConfig.from_file(p)


def test_seed_priority(monkeypatch):
    cfg = RunConfig(seed=3)
    monkeypatch.delenv("BIKEFLOW_SEED", raising=False)
    assert resolve_seed(None, cfg) == 3
    monkeypatch.setenv("BIKEFLOW_SEED", "9")
    assert resolve_seed(None, cfg) == 9
    assert resolve_seed(4, cfg) == 4
    monkeypatch.setenv("BIKEFLOW_SEED", "nine")
    with pytest.raises(UsageError):
        resolve_seed(None, cfg)


def test_alternative_methods(tmp_path):
    c = RunConfig.from_mapping({"median_order": "filter_first", "internal_similarity": "mean_pairwise"})
    assert c.median_order == "filter_first" and c.internal_similarity == "mean_pairwise"
    with pytest.raises(UsageError):
        RunConfig.from_mapping({"median_order": "sideways"})
    with pytest.raises(UsageError):
        RunConfig.from_mapping({"internal_similarity": "bogus"})

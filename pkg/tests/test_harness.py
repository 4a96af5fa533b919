import json

import numpy as np
import pytest

from toposig.exceptions import InputValidationError, NormalizationError, PairingError
from toposig.harness import (
    ExperimentConfig,
    classify_trend,
    detection_study,
    mixture_curve,
    monotonicity_table,
    table_to_markdown,
)
from toposig.pcp import PcpParams, sample_pcp, standard_simplex
from toposig.tcloss import TCParams

K = 10
TP = TCParams(method="TP", alpha=1.0, max_dim=0)


@pytest.fixture(scope="module")
def pcp_pair():
    clean = sample_pcp(PcpParams.even(K, 1.0, 40, 220, seed=1)).points
    adv = sample_pcp(PcpParams.even(K, 0.05, 12, 220, seed=2)).points
    return clean, adv, standard_simplex(K).vertices


def test_identical_sets_give_flat_curve(pcp_pair):
    clean, _, T = pcp_pair
    curve = mixture_curve(clean, clean.copy(), T, 6, TP)
    np.testing.assert_array_equal(curve.normalized_loss, 1.0)
    assert curve.trend == "NONMONOTONE"


def test_two_step_endpoints(pcp_pair):
    clean, adv, T = pcp_pair
    full = mixture_curve(adv, adv, T, 2, TP).raw_loss[0]
    curve = mixture_curve(clean, adv, T, 2, TP)
    np.testing.assert_array_equal(curve.ratios, [0.0, 1.0])
    assert curve.normalized_loss[0] == 1.0
    assert curve.raw_loss[1] == pytest.approx(full, rel=1e-12)


def test_scattered_mixture_goes_up(pcp_pair):
    clean, adv, T = pcp_pair
    curve = mixture_curve(clean, adv, T, 11, TP, seeds=(0, 1))
    assert curve.trend == "UP"
    assert curve.normalized_loss[-1] > 1


def test_pairing_error(pcp_pair):
    clean, adv, T = pcp_pair
    with pytest.raises(PairingError):
        mixture_curve(clean, adv[:-1], T, 3, TP)


def test_zero_baseline_loss():
    X = np.random.default_rng(0).normal(size=(8, 2))
    with pytest.raises(NormalizationError):
        mixture_curve(X, X + 1, X, 3, TP)


def test_classify_trend():
    r = np.linspace(0, 1, 11)
    assert classify_trend(r, r**2)[0] == "UP"
    assert classify_trend(r, -r)[0] == "DOWN"
    assert classify_trend(r, np.sin(6 * r))[0] == "NONMONOTONE"
    assert classify_trend(r, np.ones(11))[0] == "NONMONOTONE"


def test_table_symbols(pcp_pair):
    clean, adv, T = pcp_pair
    up = mixture_curve(clean, adv, T, 5, TP)
    flat = mixture_curve(clean, clean, T, 5, TP)
    table = monotonicity_table({("TP", "attack-a"): up, ("TP", "attack-b"): flat})
    assert table == [["", "attack-a", "attack-b"], ["TP", "↑", "−"]]
    md = table_to_markdown(table)
    assert md.splitlines()[2] == "| TP | ↑ | − |"


@pytest.fixture(scope="module")
def study_data():
    clean = sample_pcp(PcpParams.even(K, 1.0, 40, 400, seed=3)).points
    adv = sample_pcp(PcpParams.even(K, 0.05, 12, 200, seed=4)).points
    return clean, adv, standard_simplex(K).vertices


def _config(**kw):
    base = dict(batch_size=20, holdout_size=100, calibration_size=40, trials=1, permutations=100, optimize_steps=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_trial_row(study_data):
    clean, adv, T = study_data
    res = detection_study(_config(seed=7), clean, adv, T)
    assert len(res.rows) == 1
    trial, kernel, stat, thr, p, rej, seed = res.rows[0]
    assert (trial, kernel) == (0, "TPSAMMD")
    assert rej == int(stat > thr) and 0 < p <= 1
    assert isinstance(seed, int)


def test_index_sets_are_disjoint(study_data):
    clean, adv, T = study_data
    res = detection_study(_config(trials=3, mode="type1", kernels=["GAUSSIAN", "TPSAMMD"]), clean, adv, T)
    ix = res.indices
    z, cal = set(ix["holdout"].tolist()), set(ix["calibration_clean"].tolist())
    assert ix["holdout_from_clean"] and not z & cal
    for x, y in ix["trials"]:
        x, y = set(x.tolist()), set(y.tolist())
        assert not x & y and not (x | y) & (z | cal)
    cal_adv = set(ix["calibration_adversarial"].tolist())
    assert len(cal_adv) == 40
    assert len(res.rows) == 6


def test_study_is_reproducible(study_data):
    clean, adv, T = study_data
    a = detection_study(_config(trials=2), clean, adv, T)
    b = detection_study(_config(trials=2), clean, adv, T)
    assert a.rows == b.rows


def test_too_few_rows(study_data):
    clean, adv, T = study_data
    with pytest.raises(InputValidationError):
        detection_study(_config(holdout_size=390), clean, adv, T)


def test_config_from_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"mode": "type1", "kernels": ["mksammd", "gaussian"], "trials": 3}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.kernels == ["MKSAMMD", "GAUSSIAN"] and cfg.trials == 3
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize(
    "payload",
    ['{"trails": 3}', "[1, 2]", "{not json", '{"mode": "both"}', '{"kernels": ["ME"]}'],
)
def test_bad_config(tmp_path, payload):
    path = tmp_path / "c.json"
    path.write_text(payload)
    with pytest.raises(InputValidationError):
        ExperimentConfig.from_json(path)

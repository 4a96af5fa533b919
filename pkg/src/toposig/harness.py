"""Experiment drivers: mixture-ratio curves, monotonicity tables and detection studies."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np
from scipy.stats import spearmanr

from .exceptions import InputValidationError, NormalizationError, PairingError
from .grad import batch_features
from .io import load_cloud
from .mmdtest import KernelParams, initial_params, optimize_kernel, permutation_test
from .persistence import vr_persistence
from .pointcloud import check_cloud, pairwise_distances
from .tcloss import TCParams, tc_loss

log = logging.getLogger(__name__)

TREND_THRESHOLD = 0.95
SYMBOLS = {"UP": "↑", "DOWN": "↓", "NONMONOTONE": "−"}


@dataclass(frozen=True, eq=False)
class MixtureCurve:
    ratios: np.ndarray
    raw_loss: np.ndarray
    normalized_loss: np.ndarray
    method: str
    trend: str
    spearman: float


def classify_trend(ratios, values) -> tuple[str, float]:
    if np.ptp(values) == 0:
        return "NONMONOTONE", float("nan")
    rho = float(spearmanr(ratios, values).statistic)
    if math.isnan(rho):
        return "NONMONOTONE", rho
    if rho >= TREND_THRESHOLD:
        return "UP", rho
    if rho <= -TREND_THRESHOLD:
        return "DOWN", rho
    return "NONMONOTONE", rho


def mixture_curve(clean, adv, text, steps: int, params: TCParams, seeds=(0,), text_diagram=None) -> MixtureCurve:
    """Loss of a batch against the text cloud as clean rows are swapped for their adversarial twins.

    At ratio ``k / (steps - 1)`` the first ``floor(ratio * N)`` rows of a
    seeded random order are replaced. Each seed's curve is divided by its
    all-clean value and the normalized curves are averaged over seeds.
    """
    clean = check_cloud(clean, "clean")
    adv = check_cloud(adv, "adversarial")
    if clean.shape != adv.shape:
        raise PairingError(f"clean and adversarial clouds must pair row by row, got {clean.shape} and {adv.shape}")
    if steps < 2:
        raise InputValidationError("steps must be >= 2")
    seeds = list(seeds)
    if not seeds:
        raise InputValidationError("need at least one seed")
    if text_diagram is None:
        text_diagram = vr_persistence(pairwise_distances(check_cloud(text, "text")), max_dim=params.max_dim)
    n = clean.shape[0]
    ratios = np.arange(steps) / (steps - 1)

    def loss(cloud):
        return tc_loss(vr_persistence(pairwise_distances(cloud), max_dim=params.max_dim), text_diagram, params)

    base = loss(clean)
    if base == 0:
        raise NormalizationError("the all-clean loss is zero; cannot normalize")
    raw = np.empty((len(seeds), steps))
    for s, seed in enumerate(seeds):
        order = np.random.default_rng([seed]).permutation(n)
        raw[s, 0] = base
        for k in range(1, steps):
            m = (k * n) // (steps - 1)
            mix = clean.copy()
            mix[order[:m]] = adv[order[:m]]
            raw[s, k] = loss(mix)
    normalized = (raw / base).mean(axis=0)
    normalized[0] = 1.0
    trend, rho = classify_trend(ratios, normalized)
    return MixtureCurve(
        ratios=ratios,
        raw_loss=raw.mean(axis=0),
        normalized_loss=normalized,
        method=params.method,
        trend=trend,
        spearman=rho,
    )


def monotonicity_table(curves: dict) -> list[list[str]]:
    """Render ``{(row_label, col_label): MixtureCurve}`` as a grid of trend symbols.

    The first row is the header; missing cells are left blank.
    """
    rows = sorted({r for r, _ in curves}, key=str)
    cols = sorted({c for _, c in curves}, key=str)
    table = [[""] + [str(c) for c in cols]]
    for r in rows:
        table.append([str(r)] + [SYMBOLS[curves[(r, c)].trend] if (r, c) in curves else "" for c in cols])
    return table


def table_to_markdown(table) -> str:
    head, *body = table
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentConfig:
    """Settings for :func:`detection_study`; loadable from a flat JSON object."""

    clean: Optional[str] = None
    adversarial: Optional[str] = None
    text: Optional[str] = None
    holdout: Optional[str] = None
    mode: str = "power"
    kernels: list = field(default_factory=lambda: ["TPSAMMD"])
    batch_size: int = 50
    holdout_size: int = 1000
    calibration_size: int = 100
    trials: int = 100
    permutations: int = 200
    alpha: float = 0.05
    seed: int = 0
    tp_alpha: float = 1.0
    mk_sigma: float = 1.0
    max_dim: int = 0
    optimize_steps: int = 50
    learning_rate: float = 0.05
    eps0: float = 0.1
    bandwidth_scales: list = field(default_factory=lambda: [0.1, 0.3, 1.0, 3.0])
    l2_normalize: bool = False

    def __post_init__(self):
        if self.mode not in ("power", "type1"):
            raise InputValidationError(f"mode must be 'power' or 'type1', got {self.mode!r}")
        self.kernels = [KernelParams(method=k).method for k in self.kernels]
        for name in ("batch_size", "holdout_size", "trials", "permutations"):
            if getattr(self, name) < 1:
                raise InputValidationError(f"{name} must be >= 1")
        if self.batch_size < 2:
            raise InputValidationError("batch_size must be >= 2")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputValidationError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise InputValidationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def tc_params(self, kernel: str) -> Optional[TCParams]:
        if kernel == "TPSAMMD":
            return TCParams(method="TP", alpha=self.tp_alpha, max_dim=self.max_dim)
        if kernel == "MKSAMMD":
            return TCParams(method="MK", sigma=self.mk_sigma, max_dim=self.max_dim)
        return None


@dataclass(frozen=True, eq=False)
class DetectionResult:
    rows: list
    rates: dict
    kernel_params: dict
    indices: dict

    HEADER = ("trial", "kernel", "statistic", "threshold", "p_value", "reject", "seed")


def _features_in_chunks(batch, Z, text_diagram, params, chunk):
    return np.vstack(
        [batch_features(batch[s : s + chunk], Z, None, params, text_diagram=text_diagram).grads for s in range(0, len(batch), chunk)]
    )


def _view(kernel, emb, feats):
    return (emb, feats[kernel]) if kernel in feats else emb


def detection_study(config: ExperimentConfig, clean=None, adversarial=None, text=None, holdout=None) -> DetectionResult:
    """Rejection rates of MMD tests on clean-vs-test batches.

    Arrays passed directly take precedence over the paths in ``config``. In
    ``power`` mode the test batch is drawn from the adversarial rows; in
    ``type1`` mode from clean rows disjoint from the clean batch. Every trial
    draws its batches from a substream of the config seed, and all kernels are
    evaluated on the same draws.
    """
    l2 = config.l2_normalize

    def get(arr, path, name, required):
        if arr is not None:
            return check_cloud(arr, name)
        if path is not None:
            return load_cloud(path, l2=l2)
        if required:
            raise InputValidationError(f"no {name} data given")
        return None

    clean = get(clean, config.clean, "clean", True)
    text = get(text, config.text, "text", any(k in ("TPSAMMD", "MKSAMMD") for k in config.kernels))
    holdout = get(holdout, config.holdout, "holdout", False)
    adversarial = get(adversarial, config.adversarial, "adversarial", config.mode == "power")

    b, h, c = config.batch_size, config.holdout_size, config.calibration_size
    rng = np.random.default_rng([config.seed, 0])
    clean_order = rng.permutation(clean.shape[0])
    if holdout is None:
        z_idx, clean_order = clean_order[:h], clean_order[h:]
        Z = clean[z_idx]
    else:
        z_idx = np.random.default_rng([config.seed, 1]).permutation(holdout.shape[0])[:h]
        Z = holdout[z_idx]
    use_calibration = adversarial is not None and c >= 2
    cal_clean_idx = clean_order[:c] if use_calibration else clean_order[:0]
    pool_clean = clean_order[len(cal_clean_idx) :]
    if adversarial is not None:
        adv_order = np.random.default_rng([config.seed, 2]).permutation(adversarial.shape[0])
        cal_adv_idx = adv_order[:c] if use_calibration else adv_order[:0]
        pool_adv = adv_order[len(cal_adv_idx) :]
    else:
        cal_adv_idx = pool_adv = np.empty(0, dtype=np.int64)

    need_clean = 2 * b if config.mode == "type1" else b
    if len(Z) < 1 or pool_clean.size < need_clean or (config.mode == "power" and pool_adv.size < b):
        raise InputValidationError(
            f"not enough rows: {pool_clean.size} clean and {pool_adv.size} adversarial left after hold-out/calibration"
        )

    tc = {k: config.tc_params(k) for k in config.kernels if config.tc_params(k) is not None}
    text_diagrams = {
        k: vr_persistence(pairwise_distances(text), max_dim=p.max_dim) for k, p in tc.items()
    }

    kernel_params = {}
    for k in config.kernels:
        if use_calibration:
            xc, yc = clean[cal_clean_idx], adversarial[cal_adv_idx]
            feats_x = {k: _features_in_chunks(xc, Z, text_diagrams[k], tc[k], b)} if k in tc else {}
            feats_y = {k: _features_in_chunks(yc, Z, text_diagrams[k], tc[k], b)} if k in tc else {}
            setx, sety = _view(k, xc, feats_x), _view(k, yc, feats_y)
            p0 = initial_params(k, setx, sety, eps0=config.eps0)
            kernel_params[k] = optimize_kernel(
                setx, sety, p0, steps=config.optimize_steps, lr=config.learning_rate, bandwidth_scales=config.bandwidth_scales
            )
        else:
            pool = clean[pool_clean]
            kernel_params[k] = initial_params(k, pool, pool, eps0=config.eps0)
        log.info("kernel %s: %s", k, kernel_params[k])

    rows, trial_idx = [], []
    rejections = {k: 0 for k in config.kernels}
    for t in range(config.trials):
        trng = np.random.default_rng([config.seed, 3, t])
        picked = trng.choice(pool_clean, size=need_clean, replace=False)
        x_idx = picked[:b]
        if config.mode == "type1":
            y_idx, Y = picked[b:], clean[picked[b:]]
        else:
            y_idx = trng.choice(pool_adv, size=b, replace=False)
            Y = adversarial[y_idx]
        X = clean[x_idx]
        trial_idx.append((x_idx, y_idx))
        test_seed = int(np.random.SeedSequence([config.seed, 4, t]).generate_state(1)[0])
        for k in config.kernels:
            if k in tc:
                fx = batch_features(X, Z, None, tc[k], text_diagram=text_diagrams[k]).grads
                fy = batch_features(Y, Z, None, tc[k], text_diagram=text_diagrams[k]).grads
                setx, sety = (X, fx), (Y, fy)
            else:
                setx, sety = X, Y
            out = permutation_test(setx, sety, kernel_params[k], config.permutations, config.alpha, test_seed)
            rejections[k] += out.reject
            rows.append((t, k, out.statistic, out.threshold, out.p_value, int(out.reject), test_seed))

    return DetectionResult(
        rows=rows,
        rates={k: rejections[k] / config.trials for k in config.kernels},
        kernel_params=kernel_params,
        indices={
            "holdout": z_idx,
            "calibration_clean": cal_clean_idx,
            "calibration_adversarial": cal_adv_idx,
            "holdout_from_clean": holdout is None,
            "trials": trial_idx,
        },
    )

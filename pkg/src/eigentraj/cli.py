"""Command-line entry point.

Every subcommand reads a :class:`RunConfig` built from defaults, an optional
JSON config file (``--config``) and command-line flags, in that order of
precedence. Artifacts go to ``output_dir``; reports embed the resolved config.

Exit status: 0 success, 2 configuration/argument error, 3 data error,
4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import storage
from .anchors import anchor_predict, generate_anchors, normalization_params, normalize_points, normalize_tracklet
from .baselines import curve_approximation_error
from .dataset import ETH_UCY_SCENES, LAYOUTS, SplitSpec, leave_one_out, load_scenes, perturb_observation
from .errors import ConfigError, DataError, EigenTrajError
from .etspace import DescriptorPair, approximation_error, fit_pair, segment_error
from .metrics import classify_nonlinear, evaluate
from .plots import plot_basis
from .synthetic import write_corpus

log = logging.getLogger("eigentraj")

RECON_KS = (4, 6, 8, 10, 12)
PERTURB_SIGMAS = (0.0, 0.02, 0.05, 0.10)
CSV_FIELDS = ("scene", "model", "subset", "k", "s", "sigma", "ade", "fde", "tcc", "col", "count")


@dataclass
class RunConfig:
    dataset_root: str | None = None
    scenes: list = field(default_factory=lambda: list(ETH_UCY_SCENES))
    scene_files: dict | None = None
    held_out: str | None = None
    eval_on: str = "held-out"
    t_obs: int = 8
    t_fut: int = 12
    stride: int = 1
    frame_step: int | None = None
    unit_scale: float = 1.0
    k: int = 6
    s: int = 20
    seed: int = 0
    max_iter: int = 300
    layout: str = "interleaved"
    center: bool = False
    frame: str = "world"
    cluster_space: str = "et"
    col_threshold: float = 0.1
    col_mode: str = "best"
    sigma: float = 0.0
    sigmas: list = field(default_factory=lambda: list(PERTURB_SIGMAS))
    recon_ks: list = field(default_factory=lambda: list(RECON_KS))
    curve_order: int = 5
    bspline_ctrl: int = 6
    nonlinear_tol: float = 0.02
    segment: str = "prediction"
    descriptor: str | None = None
    output_dir: str = "out"

    def validate(self) -> "RunConfig":
        checks = [
            (self.t_obs >= 2, "t_obs must be >= 2"),
            (self.t_fut >= 1, "t_fut must be >= 1"),
            (self.stride >= 1, "stride must be >= 1"),
            (self.k >= 1, "k must be >= 1"),
            (self.s >= 1, "s must be >= 1"),
            (self.max_iter >= 1, "max_iter must be >= 1"),
            (self.unit_scale > 0, "unit_scale must be positive"),
            (self.col_threshold > 0, "col_threshold must be positive"),
            (self.sigma >= 0 and all(x >= 0 for x in self.sigmas), "noise sigma must be non-negative"),
            (self.layout in LAYOUTS, f"layout must be one of {LAYOUTS}"),
            (self.eval_on in ("held-out", "full"), "eval_on must be 'held-out' or 'full'"),
            (self.frame in ("world", "normalized"), "frame must be 'world' or 'normalized'"),
            (self.cluster_space in ("et", "euclidean"), "cluster_space must be 'et' or 'euclidean'"),
            (self.col_mode in ("best", "all"), "col_mode must be 'best' or 'all'"),
            (self.segment in ("observation", "prediction"), "segment must be 'observation' or 'prediction'"),
            (self.held_out is None or self.held_out in self.scenes, f"held_out {self.held_out!r} not in scenes"),
            (self.frame_step is None or self.frame_step >= 1, "frame_step must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    def folds(self) -> list[str]:
        return [self.held_out] if self.held_out else list(self.scenes)


def load_config(path=None, **overrides) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    values = {}
    if path is not None:
        try:
            values = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values).validate()


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _load_data(cfg: RunConfig) -> dict:
    if not cfg.dataset_root:
        raise ConfigError("dataset_root is required")
    data = load_scenes(cfg.dataset_root, cfg.scenes, cfg.t_obs, cfg.t_fut, cfg.stride,
                       cfg.unit_scale, cfg.frame_step, cfg.scene_files)
    for scene, tracklets in data.items():
        log.info("scene=%s tracklets=%d", scene, len(tracklets))
    return data


def _split(cfg: RunConfig, data: dict, scene: str):
    if cfg.eval_on == "full":
        return [t for name in sorted(data) for t in data[name]], list(data[scene])
    train, test = leave_one_out(data, SplitSpec(scene))
    if not train:
        raise ConfigError(f"fold {scene!r} has no training tracklets")
    return train, test


def _fit(cfg: RunConfig, train, k: int, scene: str) -> DescriptorPair:
    if cfg.frame == "normalized":
        train = [normalize_tracklet(t)[0] for t in train]
    others = sorted(set(cfg.scenes) - {scene}) if cfg.eval_on == "held-out" else sorted(cfg.scenes)
    provenance = f"train={','.join(others)};held_out={scene};n={len(train)};frame={cfg.frame}"
    return fit_pair(train, k, cfg.layout, cfg.center, provenance)


def _path(cfg: RunConfig, kind: str, scene: str) -> Path:
    return cfg.out / f"{kind}_{scene}.json"


def _descriptor(cfg: RunConfig, scene: str) -> DescriptorPair:
    return storage.load_descriptor(cfg.descriptor or _path(cfg, "descriptor", scene))


def _predict(cfg: RunConfig, tracklets, pair: DescriptorPair, anchors, sigma: float) -> list[np.ndarray]:
    out = []
    for i, t in enumerate(tracklets):
        obs = perturb_observation(t, sigma, cfg.seed + i).obs if sigma > 0 else t.obs
        out.append(anchor_predict(obs, anchors, pair.pred))
    return out


def _row(scene: str, cfg: RunConfig, report: dict, sigma: float, subset: str = "all", k=None) -> dict:
    return dict(scene=scene, model="anchor", subset=subset, k=k if k is not None else cfg.k, s=cfg.s,
                sigma=sigma, ade=report["ade"], fde=report["fde"], tcc=report["tcc"],
                col="" if report["col"] is None else report["col"], count=report["count"])


def _write_csv(rows: list[dict], path: Path, fieldnames=CSV_FIELDS) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return path


def _report(cfg: RunConfig, name: str, body: dict) -> Path:
    return storage.dump_json({"config": asdict(cfg), **body}, cfg.out / f"{name}.json")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fit(cfg: RunConfig) -> list[Path]:
    data = _load_data(cfg)
    paths = []
    for scene in cfg.folds():
        train, _ = _split(cfg, data, scene)
        pair = _fit(cfg, train, cfg.k, scene)
        for b in (pair.obs, pair.pred):
            log.info("fold=%s segment=%s singular_values=%s", scene, b.segment,
                     " ".join(f"{v:.6g}" for v in b.singular_values))
        meta = {"fold": scene, "n_train": len(train), "frame": cfg.frame, "config": asdict(cfg)}
        paths.append(storage.save_descriptor(pair, _path(cfg, "descriptor", scene), meta))
    return paths


def _et_errors(cfg: RunConfig, pair: DescriptorPair, test) -> tuple[float, float]:
    if cfg.frame == "world":
        return approximation_error(pair, test)
    # errors measured back in meters: a similarity transform scales distances by `scale`
    params = [normalization_params(t.obs) for t in test]
    scales = np.array([p.scale for p in params])
    out = []
    for basis, seg in ((pair.obs, "obs"), (pair.pred, "fut")):
        pts = np.stack([normalize_points(getattr(t, seg), p) for t, p in zip(test, params)])
        out.append(float((segment_error(basis, pts) * scales).mean() * 1000.0))
    return out[0], out[1]


def cmd_recon_eval(cfg: RunConfig) -> dict:
    """Reconstruction error (mm) of every descriptor family, per fold."""
    start = time.perf_counter()
    data = _load_data(cfg)
    ks = sorted(set(cfg.recon_ks))
    rows = []
    for scene in cfg.folds():
        train, test = _split(cfg, data, scene)
        if not test:
            raise ConfigError(f"fold {scene!r} has no test tracklets")
        for kind, dim in (("linear", 4), ("bezier", 2 * (cfg.curve_order + 1)), ("bspline", 2 * cfg.bspline_ctrl)):
            o, p = curve_approximation_error(kind, test, cfg.curve_order,
                                             cfg.bspline_ctrl if kind == "bspline" else None)
            rows.append(dict(scene=scene, descriptor=kind, dim=dim, obs_mm=o, pred_mm=p, n_test=len(test)))
        full = _fit(cfg, train, max(ks), scene)
        for k in ks:
            pair = DescriptorPair(full.obs.truncate(k), full.pred.truncate(k), full.provenance)
            o, p = _et_errors(cfg, pair, test)
            rows.append(dict(scene=scene, descriptor="et", dim=k, obs_mm=o, pred_mm=p, n_test=len(test)))
    descriptors = []
    for r in rows:
        key = (r["descriptor"], r["dim"])
        if key not in descriptors:
            descriptors.append(key)
    average = []
    for kind, dim in descriptors:
        sel = [r for r in rows if (r["descriptor"], r["dim"]) == (kind, dim)]
        average.append(dict(scene="AVG", descriptor=kind, dim=dim,
                            obs_mm=float(np.mean([r["obs_mm"] for r in sel])),
                            pred_mm=float(np.mean([r["pred_mm"] for r in sel])),
                            n_test=sum(r["n_test"] for r in sel)))
    rows += average
    fieldnames = ("scene", "descriptor", "dim", "obs_mm", "pred_mm", "n_test")
    _write_csv(rows, cfg.out / "recon_report.csv", fieldnames)
    (cfg.out / "recon_report.txt").write_text(_recon_table(rows, cfg.folds()))
    _report(cfg, "recon_report", {"rows": rows})
    log.info("recon-eval done in %.2fs", time.perf_counter() - start)
    return {"rows": rows}


def _recon_table(rows: list[dict], scenes: list[str]) -> str:
    cols = list(scenes) + ["AVG"]
    lines = [f"{'Descriptor':<12}{'Dim':>5}" + "".join(f"{c.upper():>12}" for c in cols)]
    seen = []
    for r in rows:
        key = (r["descriptor"], r["dim"])
        if key in seen:
            continue
        seen.append(key)
        cells = []
        for c in cols:
            m = next(x for x in rows if x["scene"] == c and (x["descriptor"], x["dim"]) == key)
            cells.append(f"{round(m['obs_mm']):02d} / {round(m['pred_mm']):02d}")
        lines.append(f"{key[0]:<12}{key[1]:>5}" + "".join(f"{c:>12}" for c in cells))
    return "\n".join(lines) + "\n"


def cmd_anchors(cfg: RunConfig) -> list[Path]:
    data = _load_data(cfg)
    paths = []
    for scene in cfg.folds():
        pair = _descriptor(cfg, scene)
        train, _ = _split(cfg, data, scene)
        anchors = generate_anchors(train, pair.pred, cfg.s, cfg.seed, cfg.max_iter, cfg.cluster_space,
                                   provenance=pair.provenance)
        log.info("fold=%s anchors s=%d k=%d inertia=%.6g iterations=%d", scene, anchors.s, anchors.k,
                 anchors.inertia, anchors.n_iter)
        meta = {"fold": scene, "cluster_space": cfg.cluster_space, "config": asdict(cfg)}
        paths.append(storage.save_anchors(anchors, _path(cfg, "anchors", scene), meta))
    return paths


def _load_models(cfg: RunConfig, scene: str):
    pair = _descriptor(cfg, scene)
    anchors = storage.load_anchors(_path(cfg, "anchors", scene))
    if anchors.k != pair.pred.k:
        raise ConfigError(f"anchors for {scene!r} have k={anchors.k}, descriptor has k={pair.pred.k}")
    return pair, anchors


def cmd_predict(cfg: RunConfig) -> list[Path]:
    data = _load_data(cfg)
    paths = []
    for scene in cfg.folds():
        pair, anchors = _load_models(cfg, scene)
        _, test = _split(cfg, data, scene)
        preds = _predict(cfg, test, pair, anchors, cfg.sigma)
        items = [dict(source=t.source, pedestrian_id=t.pedestrian_id, start_frame=t.start_frame, samples=p)
                 for t, p in zip(test, preds)]
        meta = {"fold": scene, "k": pair.pred.k, "s": anchors.s, "sigma": cfg.sigma}
        paths.append(storage.save_predictions(items, _path(cfg, "predictions", scene), meta))
    return paths


def cmd_eval(cfg: RunConfig) -> dict:
    data = _load_data(cfg)
    rows, reports = [], {}
    for scene in cfg.folds():
        preds, meta = storage.load_predictions(_path(cfg, "predictions", scene))
        _, test = _split(cfg, data, scene)
        missing = [t.key for t in test if t.key not in preds]
        if missing:
            raise DataError(f"{len(missing)} test tracklets of {scene!r} have no predictions, e.g. {missing[0]}")
        report = evaluate(test, [preds[t.key] for t in test], cfg.col_threshold, cfg.col_mode).to_dict()
        reports[scene] = report
        rows.append(_row(scene, cfg, report, meta.get("sigma", 0.0), k=meta.get("k")))
    _write_csv(rows, cfg.out / "metrics.csv")
    _report(cfg, "metrics_report", {"folds": reports})
    return {"rows": rows, "folds": reports}


def cmd_perturb_eval(cfg: RunConfig) -> dict:
    data = _load_data(cfg)
    rows = []
    for scene in cfg.folds():
        pair, anchors = _load_models(cfg, scene)
        _, test = _split(cfg, data, scene)
        for sigma in cfg.sigmas:
            report = evaluate(test, _predict(cfg, test, pair, anchors, sigma),
                              cfg.col_threshold, cfg.col_mode).to_dict()
            rows.append(_row(scene, cfg, report, sigma, k=pair.pred.k))
    _write_csv(rows, cfg.out / "perturb_metrics.csv")
    _report(cfg, "perturb_report", {"rows": rows})
    return {"rows": rows}


def cmd_nonlinear_eval(cfg: RunConfig) -> dict:
    data = _load_data(cfg)
    rows = []
    for scene in cfg.folds():
        pair, anchors = _load_models(cfg, scene)
        _, test = _split(cfg, data, scene)
        preds = _predict(cfg, test, pair, anchors, 0.0)
        flags = [classify_nonlinear(t.fut, cfg.nonlinear_tol) for t in test]
        rows.append(_row(scene, cfg, evaluate(test, preds, cfg.col_threshold, cfg.col_mode).to_dict(),
                         0.0, "all", pair.pred.k))
        nl = [i for i, f in enumerate(flags) if f]
        log.info("fold=%s nonlinear=%d of %d", scene, len(nl), len(test))
        if nl:
            report = evaluate([test[i] for i in nl], [preds[i] for i in nl],
                              cfg.col_threshold, cfg.col_mode).to_dict()
            rows.append(_row(scene, cfg, report, 0.0, "nonlinear", pair.pred.k))
    _write_csv(rows, cfg.out / "nonlinear_metrics.csv")
    _report(cfg, "nonlinear_report", {"rows": rows})
    return {"rows": rows}


def cmd_plot_basis(cfg: RunConfig) -> list[Path]:
    if cfg.descriptor:
        sources = [Path(cfg.descriptor)]
    else:
        sources = [_path(cfg, "descriptor", scene) for scene in cfg.folds()]
    paths = []
    for src in sources:
        pair = storage.load_descriptor(src)
        basis = pair.obs if cfg.segment == "observation" else pair.pred
        paths += plot_basis(basis, cfg.out / "plots", prefix=src.stem)
    return paths


def cmd_synth(cfg: RunConfig) -> list[Path]:
    if not cfg.dataset_root:
        raise ConfigError("dataset_root is required")
    return write_corpus(cfg.dataset_root, cfg.scenes, cfg.seed)


COMMANDS = {
    "fit": (cmd_fit, "fit observation/prediction descriptors per leave-one-out fold"),
    "recon-eval": (cmd_recon_eval, "reconstruction-error study: linear, Bezier, B-spline and ET descriptors"),
    "anchors": (cmd_anchors, "cluster normalized training futures into trajectory anchors"),
    "predict": (cmd_predict, "anchor-based multi-modal predictions for the held-out scene"),
    "eval": (cmd_eval, "ADE/FDE/TCC/COL of saved predictions"),
    "perturb-eval": (cmd_perturb_eval, "metrics under Gaussian observation noise"),
    "nonlinear-eval": (cmd_nonlinear_eval, "metrics on the full set and on non-linear futures"),
    "plot-basis": (cmd_plot_basis, "SVG plots of the basis vectors"),
    "synth": (cmd_synth, "write a synthetic ETH/UCY-format corpus to dataset_root"),
}


def _add_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--dataset-root", dest="dataset_root", default=S)
    p.add_argument("--scenes", nargs="+", default=S)
    p.add_argument("--held-out", dest="held_out", default=S)
    p.add_argument("--eval-on", dest="eval_on", choices=("held-out", "full"), default=S)
    p.add_argument("--t-obs", dest="t_obs", type=int, default=S)
    p.add_argument("--t-fut", dest="t_fut", type=int, default=S)
    p.add_argument("--stride", type=int, default=S)
    p.add_argument("--frame-step", dest="frame_step", type=int, default=S)
    p.add_argument("--unit-scale", dest="unit_scale", type=float, default=S)
    p.add_argument("-k", "--k", dest="k", type=int, default=S)
    p.add_argument("-s", "--s", dest="s", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    p.add_argument("--layout", choices=LAYOUTS, default=S)
    p.add_argument("--center", action="store_true", default=S)
    p.add_argument("--frame", choices=("world", "normalized"), default=S)
    p.add_argument("--cluster-space", dest="cluster_space", choices=("et", "euclidean"), default=S)
    p.add_argument("--col-threshold", dest="col_threshold", type=float, default=S)
    p.add_argument("--col-mode", dest="col_mode", choices=("best", "all"), default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--sigmas", type=float, nargs="+", default=S)
    p.add_argument("--recon-ks", dest="recon_ks", type=int, nargs="+", default=S)
    p.add_argument("--curve-order", dest="curve_order", type=int, default=S)
    p.add_argument("--bspline-ctrl", dest="bspline_ctrl", type=int, default=S)
    p.add_argument("--nonlinear-tol", dest="nonlinear_tol", type=float, default=S)
    p.add_argument("--segment", choices=("observation", "prediction"), default=S)
    p.add_argument("--descriptor", default=S, help="descriptor file (overrides output_dir lookup)")
    p.add_argument("-o", "--output-dir", dest="output_dir", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigentraj", description="Low-rank trajectory descriptors: fitting, anchors and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        _add_flags(sub.add_parser(name, help=help_text, description=help_text))
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    verbose = args.pop("verbose")
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s %(message)s")
    try:
        cfg = load_config(config_path, **args)
        result = COMMANDS[command][0](cfg)
    except EigenTrajError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 2
    if isinstance(result, list):
        for p in result:
            print(p)
    else:
        print(json.dumps(result, indent=1, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())

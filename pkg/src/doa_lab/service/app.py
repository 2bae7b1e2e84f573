"""FastAPI application exposing the toolkit over HTTP.

Every operation the command line offers is a POST endpoint taking and
returning JSON; bulk data (audio, estimate CSVs, trial dumps) lives on
the shared filesystem and is referenced by path.  Input problems map to
400, domain failures (e.g. an unidentifiable calibration) to 409, so
clients can distinguish "fix your request" from "the data cannot answer".
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from scipy import stats as scipy_stats

from .. import __version__
from ..errors import UnidentifiableError
from ..geometry import calibrate_distance
from ..optimize import (
    ObjectiveKind,
    TpeConfig,
    contour_export,
    default_grid_space,
    default_tpe_space,
    grid_search,
    load_space_json,
    params_to_dict,
    presentation_rounding,
    random_search,
    read_trials_jsonl,
    tpe_optimize,
    write_contour_csv,
    write_trials_jsonl,
)
from ..pipeline import (
    BEST_OVERALL_PARAMS,
    AnnotatedRecording,
    evaluate,
    ground_truth_from_annotation,
    latency_experiment,
    load_manifest,
    read_estimates_csv,
    run_pipeline,
    write_annotation,
    write_estimates_csv,
    write_manifest,
)
from ..scenes import SceneSpec, default_suite, render, suite_from_dict, write_suite
from ..signals import FramingParams, StereoSignal, read_wav, write_wav
from .schemas import (
    CalibrateRequest,
    CalibrateResponse,
    ContourRequest,
    ContourResponse,
    EstimateRequest,
    EstimateResponse,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    LatencyGroupModel,
    LatencyRequest,
    LatencyResponse,
    MetricsModel,
    OptimizeRequest,
    OptimizeResponse,
    ParamsModel,
    SimulateRequest,
    SimulateResponse,
    TTestModel,
)

__all__ = ["create_app", "app"]


@contextmanager
def _mapped_errors():
    """Translate library exceptions into transport-level status codes.

    UnidentifiableError is checked first: it subclasses ValueError but is
    a property of the data, not the request.
    """
    try:
        yield
    except UnidentifiableError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OSError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return json.loads(p.read_text())


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return p


def _read_observations_csv(path: str) -> list[tuple[float, float]]:
    """Calibration observations: CSV rows of azimuth_rad,itd_s.

    A header row and comment lines are skipped; blank lines ignored.
    """
    rows: list[tuple[float, float]] = []
    for raw in _require_file(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2:
            raise ValueError(f"observation row needs two columns, got {line!r}")
        if parts[0] == "azimuth_rad":
            continue
        rows.append((float(parts[0]), float(parts[1])))
    return rows


def create_app() -> FastAPI:
    app = FastAPI(title="doa-lab", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        with _mapped_errors():
            model = req.head.to_model()
            out_dir = Path(req.out_dir)
            if req.suite is None:
                suite = default_suite(seed=req.seed, duration_s=req.duration_s)
                manifest = write_suite(suite, out_dir, model)
                n_train, n_test = len(suite.train), len(suite.test)
            else:
                data = _read_json(req.suite)
                if not isinstance(data, dict):
                    raise ValueError("scene file must hold a JSON object")
                if "train" in data and "test" in data:
                    suite = suite_from_dict(data)
                    manifest = write_suite(suite, out_dir, model)
                    n_train, n_test = len(suite.train), len(suite.test)
                else:
                    # A single scene spec renders as a one-recording dataset.
                    spec = SceneSpec.from_dict(data)
                    rec = render(spec, model)
                    out_dir.mkdir(parents=True, exist_ok=True)
                    write_wav(out_dir / f"{spec.label}.wav", rec.audio)
                    write_annotation(rec, out_dir / f"{spec.label}.json")
                    manifest = out_dir / "manifest.json"
                    write_manifest(
                        [
                            {
                                "wav": f"{spec.label}.wav",
                                "annotation": f"{spec.label}.json",
                                "dataset": "train",
                            }
                        ],
                        manifest,
                    )
                    n_train, n_test = 1, 0
            wavs = sorted(p.name for p in out_dir.glob("*.wav"))
            return SimulateResponse(
                manifest=str(manifest),
                n_train=n_train,
                n_test=n_test,
                wav_files=wavs,
            )

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        with _mapped_errors():
            model = req.head.to_model()
            params = (
                BEST_OVERALL_PARAMS if req.params is None else req.params.to_params()
            )
            audio = read_wav(_require_file(req.wav))
            if not isinstance(audio, StereoSignal):
                raise ValueError("estimation needs a two-channel WAV")
            # No annotation is needed to run the pipeline; attach an empty one.
            rec = AnnotatedRecording(
                audio=audio,
                speech_intervals=(),
                angle_track=((0.0, 0.0),),
            )
            estimates = run_pipeline(rec, params, model)
            write_estimates_csv(estimates, req.out_csv)
            return EstimateResponse(
                csv=req.out_csv,
                n_frames=len(estimates),
                n_accepted=sum(e.accepted for e in estimates),
            )

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate_run(req: EvaluateRequest) -> EvaluateResponse:
        with _mapped_errors():
            estimates = read_estimates_csv(_require_file(req.estimates))
            truth = ground_truth_from_annotation(_require_file(req.annotation))
            metrics = evaluate(estimates, truth)
            return EvaluateResponse(metrics=MetricsModel.from_metrics(metrics))

    @app.post("/optimize", response_model=OptimizeResponse)
    def optimize(req: OptimizeRequest) -> OptimizeResponse:
        with _mapped_errors():
            model = req.head.to_model()
            train, test = load_manifest(_require_file(req.manifest))
            dataset = {"train": train, "test": test, "all": train + test}[req.dataset]
            if not dataset:
                raise ValueError(f"manifest has no {req.dataset!r} recordings")
            if req.space is not None:
                space = load_space_json(_require_file(req.space))
            elif req.method == "grid":
                space = default_grid_space()
            else:
                space = default_tpe_space()
            kind = ObjectiveKind(req.objective)
            if req.method == "grid":
                best, trials = grid_search(
                    space, kind, dataset, model=model, lam=req.lam
                )
            elif req.method == "tpe":
                config = TpeConfig(seed=req.seed)
                best, trials = tpe_optimize(
                    space, kind, dataset, req.trials, config, model=model, lam=req.lam
                )
            else:
                best, trials = random_search(
                    space, kind, dataset, req.trials, seed=req.seed,
                    model=model, lam=req.lam,
                )
            out_dir = Path(req.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            trials_path = out_dir / "trials.jsonl"
            best_path = out_dir / "best_params.json"
            write_trials_jsonl(trials, trials_path)
            if best is None:
                best_doc = {"no_trials": True, "method": req.method,
                            "objective": kind.value, "n_trials": 0}
                best_path.write_text(json.dumps(best_doc, indent=2) + "\n")
                return OptimizeResponse(
                    best=None,
                    best_rounded=None,
                    best_objective=None,
                    n_trials=0,
                    trials_jsonl=str(trials_path),
                    best_json=str(best_path),
                    no_trials=True,
                )
            rounded = presentation_rounding(best.params)
            best_doc = {
                "params": params_to_dict(best.params),
                "params_rounded": params_to_dict(rounded),
                "objective": best.objective,
                "objective_kind": kind.value,
                "method": req.method,
                "n_trials": len(trials),
                "seed": req.seed,
            }
            best_path.write_text(json.dumps(best_doc, indent=2) + "\n")
            return OptimizeResponse(
                best=ParamsModel.from_params(best.params),
                best_rounded=ParamsModel.from_params(rounded),
                best_objective=best.objective,
                n_trials=len(trials),
                trials_jsonl=str(trials_path),
                best_json=str(best_path),
            )

    @app.post("/latency", response_model=LatencyResponse)
    def latency(req: LatencyRequest) -> LatencyResponse:
        with _mapped_errors():
            model = req.head.to_model()
            params = (
                BEST_OVERALL_PARAMS if req.params is None else req.params.to_params()
            )
            train, test = load_manifest(_require_file(req.manifest))
            recordings = train + test
            if not recordings:
                raise ValueError("manifest has no recordings")
            groups = []
            for frame_s in req.frame_sizes_s:
                framing = FramingParams(frame_s, params.framing.step_fraction)
                p = replace(params, framing=framing)
                latencies: list[float] = []
                dropped = 0
                for rec in recordings:
                    stats = latency_experiment(rec, p, model, req.repeats)
                    latencies.extend(stats.latencies_s)
                    dropped += stats.n_dropped
                arr = np.asarray(latencies)
                groups.append(
                    LatencyGroupModel(
                        frame_size_s=frame_s,
                        n_events=len(latencies),
                        n_dropped=dropped,
                        mean_s=float(arr.mean()) if len(arr) else None,
                        std_s=float(arr.std(ddof=1)) if len(arr) > 1 else None,
                        latencies_s=[float(v) for v in latencies],
                    )
                )
            t_test = None
            if len(groups) == 2 and groups[0].n_events > 1 and groups[1].n_events > 1:
                res = scipy_stats.ttest_ind(
                    groups[0].latencies_s, groups[1].latencies_s
                )
                t_test = TTestModel(
                    frame_a_s=groups[0].frame_size_s,
                    frame_b_s=groups[1].frame_size_s,
                    statistic=float(res.statistic),
                    p_value=float(res.pvalue),
                )
            return LatencyResponse(groups=groups, t_test=t_test)

    @app.post("/calibrate", response_model=CalibrateResponse)
    def calibrate(req: CalibrateRequest) -> CalibrateResponse:
        with _mapped_errors():
            observations = _read_observations_csv(req.observations)
            if not observations:
                raise ValueError("observations CSV has no data rows")
            fitted = calibrate_distance(observations, req.speed_of_sound_mps)
            if req.out is not None:
                doc = {
                    "ear_distance_m": fitted,
                    "speed_of_sound_mps": req.speed_of_sound_mps,
                    "n_observations": len(observations),
                }
                Path(req.out).write_text(json.dumps(doc, indent=2) + "\n")
            return CalibrateResponse(
                ear_distance_m=fitted, n_observations=len(observations)
            )

    @app.post("/contour", response_model=ContourResponse)
    def contour(req: ContourRequest) -> ContourResponse:
        with _mapped_errors():
            trials = read_trials_jsonl(_require_file(req.trials))
            grid = contour_export(trials, req.x, req.y, stat=req.stat, bins=req.bins)
            write_contour_csv(grid, req.out)
            n_filled = sum(v is not None for row in grid.cells for v in row)
            return ContourResponse(
                csv=req.out,
                x_param=grid.x_param,
                y_param=grid.y_param,
                bins_x=len(grid.x_centers),
                bins_y=len(grid.y_centers),
                n_filled=n_filled,
            )

    return app


app = create_app()

"""FastAPI wiring: one POST endpoint per experiment command.

Domain failures surface as HTTP 400 with a machine-readable
{"code": ..., "message": ...} detail; malformed requests get the usual 422.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import RelorbitError
from . import runners
from . import schemas as S


def _run(command, cfg):
    cfg.command = command
    try:
        return runners.RUNNERS[command](cfg)
    except RelorbitError as exc:
        raise HTTPException(status_code=400, detail=exc.payload())
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=400,
                            detail={"code": "invalid-parameter", "message": str(exc)})


def create_app():
    app = FastAPI(title="relorbit", version=__version__,
                  description="Special-relativistic central-force experiments")

    @app.get("/health", response_model=S.HealthResponse)
    def health():
        return S.HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=S.SimulateResponse)
    def simulate(cfg: S.RunConfig):
        return _run("simulate", cfg)

    @app.post("/classify", response_model=S.ClassifyResponse)
    def classify(cfg: S.RunConfig):
        return _run("classify", cfg)

    @app.post("/classify-grid", response_model=S.ClassifyGridResponse)
    def classify_grid(cfg: S.RunConfig):
        return _run("classify-grid", cfg)

    @app.post("/circular", response_model=S.CircularResponse)
    def circular(cfg: S.RunConfig):
        return _run("circular", cfg)

    @app.post("/period", response_model=S.PeriodResponse)
    def period(cfg: S.RunConfig):
        return _run("period", cfg)

    @app.post("/bertrand", response_model=S.BertrandResponse)
    def bertrand(cfg: S.RunConfig):
        return _run("bertrand", cfg)

    @app.post("/rungelenz", response_model=S.RungeLenzResponse)
    def rungelenz(cfg: S.RunConfig):
        return _run("rungelenz", cfg)

    @app.post("/collision", response_model=S.CollisionResponse)
    def collision(cfg: S.RunConfig):
        return _run("collision", cfg)

    return app


app = create_app()

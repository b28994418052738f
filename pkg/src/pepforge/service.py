"""HTTP reward service for RL trainers.

Endpoints: ``POST /score``, ``POST /advantages``, ``POST /objective`` and
``GET /health``. Malformed bodies get 400 with the offending field path;
well-formed but unusable input gets 422.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .config import AppConfig
from .grpo import GrpoConfig, GrpoError, RolloutGroup, advantages, objective_gradient, surrogate_objective
from .scoring import DEFAULT_SESSION, Scorer, SeedError


class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Candidate(_Body):
    smiles: str


class ScoreRequest(_Body):
    seed_smiles: str
    candidates: list[Candidate]
    session: Optional[str] = None


class AdvantageRequest(_Body):
    rewards: list[float]


class ObjectiveRequest(_Body):
    rewards: list[float]
    logp_theta: list[list[float]]
    logp_old: list[list[float]]
    logp_ref: list[list[float]]
    advantages: Optional[list[float]] = None
    epsilon: Optional[float] = Field(default=None, gt=0, lt=1)
    beta: Optional[float] = Field(default=None, ge=0)
    gradient: bool = False


class SemanticError(Exception):
    pass


def create_app(config: AppConfig | None = None) -> FastAPI:
    config = config or AppConfig()
    scorer = Scorer(config)
    config_hash = config.config_hash()
    app = FastAPI(title="pepforge reward service")
    app.state.scorer = scorer

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        errors = [
            {"loc": ".".join(str(x) for x in err["loc"]), "msg": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": errors})

    @app.exception_handler(SemanticError)
    async def _semantic(request: Request, exc: SemanticError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/score")
    def post_score(req: ScoreRequest):
        session = req.session or DEFAULT_SESSION
        try:
            results = scorer.score_batch(req.seed_smiles, [c.smiles for c in req.candidates], session)
        except SeedError as exc:
            raise SemanticError(str(exc)) from exc
        return {"session": session, "results": [r.as_dict() for r in results]}

    @app.post("/advantages")
    def post_advantages(req: AdvantageRequest):
        try:
            adv = advantages(req.rewards)
        except GrpoError as exc:
            raise SemanticError(str(exc)) from exc
        return {"advantages": adv.tolist()}

    @app.post("/objective")
    def post_objective(req: ObjectiveRequest):
        cfg = GrpoConfig(
            epsilon=config.grpo.epsilon if req.epsilon is None else req.epsilon,
            beta=config.grpo.beta if req.beta is None else req.beta,
        )
        try:
            group = RolloutGroup.build(req.rewards, req.logp_theta, req.logp_old, req.logp_ref)
            adv = advantages(group.rewards) if req.advantages is None else req.advantages
            value = surrogate_objective(group, adv, cfg)
            grad = objective_gradient(group, adv, cfg) if req.gradient else None
        except GrpoError as exc:
            raise SemanticError(str(exc)) from exc
        out = {"objective": value, "advantages": [float(a) for a in adv]}
        if grad is not None:
            out["gradient"] = [g.tolist() for g in grad]
        return out

    @app.get("/health")
    def get_health():
        sizes = scorer.session_sizes()
        return {
            "status": "ok",
            "config_hash": config_hash,
            "history_size": sum(sizes.values()),
            "sessions": sizes,
        }

    return app

"""FastAPI pricing service for basket call options."""

import time
from contextlib import asynccontextmanager
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from src import __version__
from src.config import get_settings
from src.errors import ConfigError, InvalidModelError, PricingError
from src.harness.runner import reproduce_table, run_price
from src.harness.schema import ExperimentConfig
from src.harness.tables import table_definition
from src.observability.logging import logger

# Load environment variables
load_dotenv()


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifecycle management for FastAPI app."""
    settings = get_settings()
    logger.info("Starting basket pricing API", threads=settings.threads, log_level=settings.log_level)
    yield
    logger.info("Shutting down basket pricing API")


app = FastAPI(
    title="Basket LBA Pricer",
    description="Basket call prices under local-volatility jump-diffusions",
    version=__version__,
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Request/Response models
class PriceRow(BaseModel):
    method: str
    strike: float
    maturity: float
    price: Optional[float] = None
    stderr: Optional[float] = None
    implied_vol: Optional[float] = None
    error: Optional[str] = None


class PriceResponse(BaseModel):
    config_id: str
    rows: List[PriceRow]
    latency_ms: float


class ReproduceRow(BaseModel):
    config: str
    method: str
    price: Optional[float] = None
    stderr: Optional[float] = None
    iv: Optional[float] = None
    rel_err: Optional[float] = None
    paper: Optional[float] = None
    error: Optional[str] = None


class ReproduceResponse(BaseModel):
    table_id: int
    variant: Optional[str] = None
    rows: List[ReproduceRow]
    averages: Dict[str, float]
    published_averages: Dict[str, float]


class HealthResponse(BaseModel):
    status: str
    version: str
    threads: int


@app.get("/health", response_model=HealthResponse)
def health_check() -> HealthResponse:
    """Health check endpoint."""
    return HealthResponse(status="healthy", version=__version__, threads=get_settings().threads)


@app.post("/price", response_model=PriceResponse)
def price(config: ExperimentConfig) -> PriceResponse:
    """Price every requested method for one experiment config.

    Schema violations are rejected by FastAPI with 422 before this runs.
    """
    start_time = time.time()
    logger.info("Price request received", config_id=config.id, methods=list(config.methods))

    try:
        results = run_price(config)
    except InvalidModelError as e:
        logger.warning("Price request rejected", config_id=config.id, error=str(e), error_type=type(e).__name__)
        raise HTTPException(status_code=400, detail=str(e))
    except PricingError as e:
        logger.error("Price request failed", config_id=config.id, error=str(e), error_type=type(e).__name__)
        raise HTTPException(status_code=500, detail=f"Numerical failure: {e}")

    latency_ms = (time.time() - start_time) * 1000
    logger.info("Price request completed", config_id=config.id, rows=len(results), latency_ms=latency_ms)
    return PriceResponse(
        config_id=config.id,
        rows=[
            PriceRow(
                method=r.method,
                strike=r.strike,
                maturity=r.maturity,
                price=r.price,
                stderr=r.stderr,
                implied_vol=r.implied_vol,
                error=r.error,
            )
            for r in results
        ],
        latency_ms=latency_ms,
    )


@app.get("/reproduce/{table_id}", response_model=ReproduceResponse)
def reproduce(table_id: int, paths: Optional[int] = None, seed: Optional[int] = None,
              methods: Optional[str] = None, variant: Optional[str] = None) -> ReproduceResponse:
    """Recompute a benchmark table; `methods` is comma separated."""
    try:
        table_definition(table_id, variant)
    except KeyError as e:
        raise HTTPException(status_code=404, detail=str(e.args[0]))
    selected = [m.strip() for m in methods.split(",") if m.strip()] if methods else None

    try:
        report = reproduce_table(table_id, paths=paths, seed=seed, methods=selected, variant=variant)
    except (ConfigError, PricingError) as e:
        logger.error("Reproduce request failed", table=table_id, error=str(e), error_type=type(e).__name__)
        raise HTTPException(status_code=500, detail=str(e))

    return ReproduceResponse(
        table_id=table_id,
        variant=variant,
        rows=[
            ReproduceRow(
                config=r.config, method=r.method, price=r.price, stderr=r.stderr,
                iv=r.iv, rel_err=r.rel_err, paper=r.paper, error=r.error,
            )
            for r in report.rows
        ],
        averages=report.averages,
        published_averages=report.published_averages,
    )


@app.get("/api/info")
def api_info() -> Dict[str, Any]:
    """API information endpoint."""
    return {
        "service": "Basket LBA Pricer",
        "version": __version__,
        "methods": ["lba", "lb", "ub", "pea", "mc", "aea", "cv"],
        "endpoints": {
            "/health": "Health check",
            "/price": "Price an experiment config (POST)",
            "/reproduce/{table_id}": "Recompute benchmark table 1-4 (optional variant)",
            "/api/info": "This listing"
        }
    }


if __name__ == "__main__":
    import uvicorn

    port = get_settings().port

    logger.info(
        "Starting uvicorn server",
        port=port,
        host="0.0.0.0"
    )

    uvicorn.run(
        "src.main:app",
        host="0.0.0.0",
        port=port,
        reload=False,
        log_level="info"
    )

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from app.core.config import settings
from app.core.exceptions import DomainError, NumericsError
from app.routers import nls
import logging

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.PROJECT_NAME,
    version=settings.VERSION,
    description="Ground-states and Vakhitov–Kolokolov stability of NLS on the 𝒯-graph and the tadpole",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(nls.router, prefix=settings.API_V1_STR)

logger.info(f"{settings.PROJECT_NAME} {settings.VERSION} tolerances: {settings.tolerances()}")


@app.exception_handler(NumericsError)
async def numerics_error_handler(request: Request, exc: NumericsError):
    """Failures that escape a route handler."""
    code = status.HTTP_422_UNPROCESSABLE_ENTITY if isinstance(exc, DomainError) else status.HTTP_500_INTERNAL_SERVER_ERROR
    logger.error(f"{request.url.path}: {exc}")
    return JSONResponse(status_code=code, content={"detail": str(exc)})


@app.get("/", tags=["Health Check"])
async def root():
    return {
        "message": settings.PROJECT_NAME,
        "version": settings.VERSION,
        "status": "healthy",
    }


@app.get("/health", tags=["Health Check"])
async def health():
    return {
        "status": "healthy",
        "version": settings.VERSION,
        "tolerances": settings.tolerances(),
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
        log_level="info"
    )

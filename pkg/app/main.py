from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import settings
from app.routers import bounds, sessions, verification

app = FastAPI(
    title="GUBQC",
    description="Blind delegated computation over hidden diagonal layers: sessions, verification and bounds",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.BACKEND_CORS_ORIGINS.split(","),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(sessions.router, prefix="/api/sessions", tags=["Sessions"])
app.include_router(verification.router, prefix="/api/verify", tags=["Verification"])
app.include_router(bounds.router, prefix="/api/bounds", tags=["Bounds"])


@app.get("/api/health")
async def health_check():
    return {"status": "ok"}

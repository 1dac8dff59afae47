from pydantic_settings import BaseSettings
from pathlib import Path


class Settings(BaseSettings):
    MAX_QUBITS: int = 12
    BRANCH_CAP: int = 2**16
    SUBGROUP_CAP: int = 2**20
    CONFIG_DIR: str = ""
    TRANSCRIPT_DIR: str = "transcripts"
    HOST: str = "127.0.0.1"
    PORT: int = 7741
    SERVER_CONCURRENT: bool = False
    LOG_LEVEL: str = "INFO"
    BACKEND_CORS_ORIGINS: str = "http://localhost:3000"

    model_config = {
        "env_prefix": "GUBQC_",
        "env_file": [
            str(Path(__file__).resolve().parent.parent / ".env.example"),
            str(Path(__file__).resolve().parent.parent / ".env"),
            ".env",
        ],
        "extra": "ignore",
    }

    def resolve_config_path(self, path: str | Path) -> Path:
        """Resolve a relative --config path against CONFIG_DIR."""
        candidate = Path(path)
        if candidate.is_absolute() or not self.CONFIG_DIR:
            return candidate
        return Path(self.CONFIG_DIR) / candidate


settings = Settings()

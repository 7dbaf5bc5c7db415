import logging
from pathlib import Path
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    TESTING: bool = False

    LOG_LEVEL: str = 'INFO'
    LOG_FORMAT: Literal['json', 'console'] = 'json'

    DEFAULT_SEED: int = 0
    JOBS: int = 1
    OUTPUT_DIR: Path = BASE_DIR / 'out'
    CONFIG_DIR: Path = BASE_DIR / 'configs'

    MAX_EPOCHS: int = 200

    model_config = SettingsConfigDict(env_file='.env', extra='ignore')

    @property
    def log_level_no(self) -> int:
        """Числовой уровень логирования (для structlog)."""
        return logging.getLevelName(self.LOG_LEVEL.upper())

    @property
    def bundled_tiny_config(self) -> Path:
        """Путь к встроенной конфигурации эксперимента «tiny»."""
        return self.CONFIG_DIR / 'tiny.json'


settings = Settings()

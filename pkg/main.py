import os
import sys
import logging

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.config import get_settings
from src.cli import run

settings = get_settings()

# stdout carries only command output
logging.basicConfig(
    level=getattr(logging, settings.log_level, logging.WARNING),
    format="%(asctime)s %(name)s %(levelname)s %(message)s",
    stream=sys.stderr,
)


if __name__ == '__main__':
    sys.exit(run(sys.argv[1:], settings))

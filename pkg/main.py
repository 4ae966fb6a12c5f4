"""Entry point: python main.py <enumerate|loc|verify|contract> --scenario <path>"""

import sys

from dotenv import load_dotenv

from src.cli import main as cli_main
from src.logger import setup_logger

load_dotenv()
logger = setup_logger()


def main():
    """Run the command line and exit with its status"""
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(130)


if __name__ == "__main__":
    main()

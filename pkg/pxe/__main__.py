"""Main entry point for pxe when run as module"""

from .cli import main

if __name__ == "__main__":
    main()

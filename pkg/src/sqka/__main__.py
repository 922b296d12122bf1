import sys

from sqka.cli import main

sys.exit(main())

import sys

from rawfe.cli import main

sys.exit(main())

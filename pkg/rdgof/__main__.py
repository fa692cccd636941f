import sys

from rdgof.adapters.cli.main import main

sys.exit(main())

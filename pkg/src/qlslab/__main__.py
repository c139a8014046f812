import sys

from qlslab.cli import main

sys.exit(main())

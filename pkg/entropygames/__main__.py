import sys

from entropygames.workflows.cli import main

sys.exit(main())

from .cli import (  # noqa
    COMMANDS,
    RunConfig,
    execute,
    main,
    parse_args,
)
from .equilibration import (  # noqa
    EnsembleNetwork,
    EnsembleNode,
    EquilibrationHistory,
    exchange_step,
    exchange_step_with_refinement,
    make_node,
    merge_blocks,
    network_from_scenario,
    run,
)
from .io import write_csv, write_json  # noqa
from .retry import RefinementLogging, retry_rejected_steps  # noqa

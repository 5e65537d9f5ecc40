"""Command registry and execution"""

from .chase import run_chase
from .check import check_program
from .evaluate import run_evaluation
from .gen import generate_graph
from .ground import ground_network
from .infer import infer_marginals
from .sample import sample_chain

known_commands = {
    "check": "Validate wardedness, stratification and safety",
    "chase": "Run the warded chase and print the resulting facts",
    "ground": "Ground the chase network and print its nodes and edges",
    "infer": "Answer a query with exact or MCMC marginals",
    "sample": "Run the MCMC chase and write its per-iteration trace",
    "gen": "Generate a scale-free ownership graph",
    "eval": "Compare MCMC estimates against exact inference",
}


def execute_command(command_name, params):
    """Execute a command"""
    if command_name == "check":
        return check_program(params)
    elif command_name == "chase":
        return run_chase(params)
    elif command_name == "ground":
        return ground_network(params)
    elif command_name == "infer":
        return infer_marginals(params)
    elif command_name == "sample":
        return sample_chain(params)
    elif command_name == "gen":
        return generate_graph(params)
    elif command_name == "eval":
        return run_evaluation(params)
    else:
        return {
            "action": "unknown_command",
            "status": "fail",
            "error": f"Unknown command: {command_name}",
            "exit_code": 2,
        }

from .agent import HomeAgent, SynonymTable, create_agent_app, replay_journal, thermostat_step
from .simulator import SimConfig, SimState, Simulator, SimulatorRunner

__all__ = [
    "HomeAgent", "SynonymTable", "create_agent_app", "replay_journal",
    "thermostat_step", "SimConfig", "SimState", "Simulator", "SimulatorRunner",
]

"""Prompt-conditioned agents: action menu, prompts, parsing, backends, episodes."""
from .actions import WAIT, HighLevelAction, Template, action_group, available_actions
from .backends import (
    BackendFailure,
    HTTPBackend,
    LLMBackend,
    SamplingParams,
    ScriptedBackend,
    scripted_policy,
)
from .episode import AgentController, EpisodeAborted, EpisodeConfig, run_episode
from .parsing import ParsedResponse, parse_response
from .prompt import AGENT_NAMES, DOMAIN_KNOWLEDGE, build_prompt

__all__ = [
    "AGENT_NAMES", "AgentController", "BackendFailure", "DOMAIN_KNOWLEDGE", "EpisodeAborted",
    "EpisodeConfig", "HTTPBackend", "HighLevelAction", "LLMBackend", "ParsedResponse",
    "SamplingParams", "ScriptedBackend", "Template", "WAIT", "action_group",
    "available_actions", "build_prompt", "parse_response", "run_episode", "scripted_policy",
]

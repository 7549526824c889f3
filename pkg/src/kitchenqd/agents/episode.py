"""Drive one episode with two prompt-conditioned agents."""
from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

from ..episode_log import CompletedAction, EpisodeLog, Message, QueryRecord, config_hash
from ..planner import Unreachable, goal_for_action, plan_path, should_unstick, unstick
from ..sim.layout import Layout
from ..sim.state import Action, EventKind, WorldState, init_state, step
from .actions import WAIT_TICKS, HighLevelAction, Template, available_actions
from .backends import BackendFailure, LLMBackend, SamplingParams, stable_seed
from .parsing import parse_response
from .prompt import build_prompt


@dataclass(frozen=True)
class EpisodeConfig:
    horizon: int = 500
    requery_timeout: int = 5
    action_history_len: int = 2
    message_history_len: int = 2
    comm: bool = True
    sampling: SamplingParams = SamplingParams()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AgentController:
    agent_id: int
    personality: str
    action: Optional[HighLevelAction] = None
    wait_left: int = 0
    idle: int = 0
    needs_query: bool = True
    pursuing: bool = False
    history: list[CompletedAction] = field(default_factory=list)


class EpisodeAborted(BackendFailure):
    def __init__(self, message: str, log: EpisodeLog):
        super().__init__(message)
        self.log = log


def _choose_low_level(state: WorldState, ctrl: AgentController) -> tuple[Action, bool]:
    """(action, wants_to_move) for the controller's current high-level action."""
    hla = ctrl.action
    if hla is None or hla.is_wait:
        return Action.STAY, False
    i = ctrl.agent_id
    if hla not in available_actions(state, i):
        return Action.STAY, False
    try:
        goal = goal_for_action(state.layout, state, i, hla)
    except Unreachable:
        return Action.STAY, False
    try:
        plan = plan_path(state.layout, state, i, goal)
    except Unreachable:
        # Blocked by the other agent this tick.
        return Action.STAY, True
    return plan[0], plan[0].is_move


def run_episode(
    layout: Layout,
    prompts: Sequence[str],
    backend: LLMBackend,
    config: EpisodeConfig = EpisodeConfig(),
    seed: int = 0,
) -> EpisodeLog:
    """Simulate one episode; the returned log holds every query and event.

    Raises ``EpisodeAborted`` (a ``BackendFailure``) carrying the partial log
    when the backend gives up.
    """
    if len(prompts) != 2:
        raise ValueError("one personality per agent")
    state = init_state(layout, seed, horizon=config.horizon)
    rng = random.Random(stable_seed("episode", seed))
    ctrls = [AgentController(i, p) for i, p in enumerate(prompts)]
    log = EpisodeLog(
        layout_name=layout.name,
        seed=seed,
        horizon=config.horizon,
        layout_text=layout.to_text(),
        comm=config.comm,
        prompts=tuple(prompts),
        config_hash=config_hash(config.to_dict()),
    )

    def query(ctrl: AgentController) -> None:
        offered = available_actions(state, ctrl.agent_id)
        text = build_prompt(
            state, ctrl.agent_id, ctrl.personality, offered,
            action_history=ctrl.history,
            messages=log.messages,
            comm=config.comm,
            action_history_len=config.action_history_len,
            message_history_len=config.message_history_len,
        )
        try:
            params = replace(config.sampling, seed=stable_seed("query", seed, state.timestep, ctrl.agent_id))
            raw = backend.complete(text, params)
        except BackendFailure as exc:
            log.failed, log.error = True, str(exc)
            raise EpisodeAborted(str(exc), log) from exc
        parsed = parse_response(raw, offered, comm=config.comm)
        log.queries.append(QueryRecord(
            state.timestep, ctrl.agent_id, text, raw, parsed.action.text,
            parsed.message, parsed.fallback,
        ))
        if config.comm and parsed.message:
            log.messages.append(Message(state.timestep, ctrl.agent_id, parsed.message))
        ctrl.action = parsed.action
        ctrl.wait_left = WAIT_TICKS if parsed.action.is_wait else 0
        ctrl.idle = 0
        ctrl.needs_query = False

    moved_last = [True, True]
    pursued_last = [False, False]
    while state.timestep < config.horizon:
        order = [0, 1]
        if state.timestep == 0:
            rng.shuffle(order)
        for i in order:
            if ctrls[i].needs_query:
                query(ctrls[i])

        choices = [_choose_low_level(state, c) for c in ctrls]
        actions = [a for a, _ in choices]
        pursuing = [p for _, p in choices]
        if all(pursued_last) and should_unstick(moved_last, pursuing):
            for i, a in enumerate(unstick(pursuing, rng)):
                if a is not None:
                    actions[i] = a

        prev = state
        state, reward, events = step(state, actions)
        log.actions.append((actions[0].value, actions[1].value))
        log.rewards.append(reward)
        log.events.extend(events)

        for i, ctrl in enumerate(ctrls):
            before, after = prev.agents[i], state.agents[i]
            moved = before.position != after.position
            mine = [e for e in events if e.agent == i and e.kind not in (EventKind.MOVE, EventKind.COLLIDE)]
            effective = moved or before.orientation != after.orientation or bool(mine)
            moved_last[i] = moved
            pursued_last[i] = pursuing[i]

            hla = ctrl.action
            finished, ev = False, None
            if hla is not None and hla.is_wait:
                ctrl.wait_left -= 1
                effective = True
                finished = ctrl.wait_left <= 0
            elif hla is not None:
                ev = next((e for e in mine if hla.completed_by(e)), None)
                finished = ev is not None

            if finished:
                rec = CompletedAction(
                    prev.timestep, i, hla.template.name, hla.text,
                    ev.item.name if ev is not None and ev.item else None,
                    ev.item_uid if ev is not None else None,
                )
                ctrl.history.append(rec)
                log.completed.append(rec)
                ctrl.needs_query = True
                ctrl.idle = 0
                continue

            ctrl.idle = 0 if effective else ctrl.idle + 1
            if ctrl.idle >= config.requery_timeout:
                ctrl.needs_query = True

    return log


def completed_templates(log: EpisodeLog, agent: int) -> list[Template]:
    return [Template[c.template] for c in log.completed if c.agent == agent]

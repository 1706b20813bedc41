import logging
from collections import deque
from typing import Any, Deque, Dict, List, Tuple

from app.core.exceptions import ProtocolError
from app.net.graph import CommGraph

logger = logging.getLogger(__name__)


class DelayedInbox:
    """Per-agent FIFO of (deliver_round, message) entries over a fixed-delay graph"""

    def __init__(self, graph: CommGraph):
        self.graph = graph
        self.delay = graph.edge_delay
        self._queues: Dict[int, Deque[Tuple[int, Any]]] = {v: deque() for v in range(graph.n_agents)}
        self.sent = 0
        self.delivered = 0

    def send(self, sender: int, receiver: int, round_t: int, message: Any) -> None:
        """Queue a message on edge (sender, receiver); readable at round_t + d"""
        if not self.graph.has_edge(sender, receiver):
            raise ProtocolError(f"no edge between agents {sender} and {receiver}")
        self._queues[receiver].append((round_t + self.delay, message))
        self.sent += 1

    def broadcast(self, sender: int, round_t: int, message: Any) -> None:
        for receiver in self.graph.neighbors(sender):
            self.send(sender, receiver, round_t, message)

    def receive(self, agent: int, round_t: int) -> List[Any]:
        """Messages whose delivery round has arrived, in send order"""
        queue = self._queues[agent]
        ready = []
        while queue and queue[0][0] <= round_t:
            ready.append(queue.popleft()[1])
        self.delivered += len(ready)
        return ready

    @property
    def in_flight(self) -> int:
        return sum(len(q) for q in self._queues.values())

    def next_delivery(self, agent: int) -> float:
        """Earliest pending delivery round for agent, inf when empty"""
        queue = self._queues[agent]
        return queue[0][0] if queue else float("inf")


def delayed_send(inbox: DelayedInbox, edge: Tuple[int, int], round_t: int, message: Any) -> None:
    sender, receiver = edge
    inbox.send(sender, receiver, round_t, message)


def delayed_receive(inbox: DelayedInbox, agent: int, round_t: int) -> List[Any]:
    return inbox.receive(agent, round_t)

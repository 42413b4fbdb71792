"""
Superstep ledger: the condition-guarded state through which the computing,
sending and receiving units of one worker hand work to each other.
"""

import threading
from typing import Any, Callable, Optional

from ..utils.errors import JobAborted

# Seconds between failure checks while a unit waits
WAIT_SLICE = 0.1


class SuperstepLedger:
    """
    Permits and hand-offs between the three units.

    compute_permit = i  -> the computing unit may compute superstep i
                           (all messages of step i-1 received here)
    send_permit = i     -> the sending unit may transmit step-i messages
                           (receiver barrier of step i-1 passed everywhere)
    decided_step = i    -> the control allreduce of step i is done;
                           terminate_after is set when the job ends at i
    """

    def __init__(self):
        self.condition = threading.Condition()
        self.compute_permit = 1
        self.send_permit = 1
        self.decided_step = 0
        self.terminate_after: Optional[int] = None
        self.failure: Optional[BaseException] = None
        self.failed_unit: Optional[str] = None
        self._rings: dict[int, Any] = {}
        self._inbound: dict[int, Any] = {}

    # ---- waiting ----

    def wait_until(self, predicate: Callable[[], bool], what: str) -> None:
        """Block until predicate() holds; raise JobAborted if any unit failed."""
        with self.condition:
            while not predicate():
                if self.failure is not None:
                    raise JobAborted(f"Stopped waiting for {what}: {self.failed_unit} failed")
                self.condition.wait(WAIT_SLICE)
            if self.failure is not None:
                raise JobAborted(f"Stopped waiting for {what}: {self.failed_unit} failed")

    def fail(self, unit: str, error: BaseException) -> None:
        with self.condition:
            if self.failure is None:
                self.failure = error
                self.failed_unit = unit
            self.condition.notify_all()

    # ---- permits ----

    def grant_compute(self, step: int) -> None:
        with self.condition:
            self.compute_permit = max(self.compute_permit, step)
            self.condition.notify_all()

    def grant_send(self, step: int) -> None:
        with self.condition:
            self.send_permit = max(self.send_permit, step)
            self.condition.notify_all()

    def decide(self, step: int, terminate: bool) -> None:
        with self.condition:
            self.decided_step = step
            if terminate:
                self.terminate_after = step
            self.condition.notify_all()

    def terminated_before(self, step: int) -> bool:
        """True when the job ended at a superstep earlier than `step`."""
        with self.condition:
            return self.terminate_after is not None and self.terminate_after < step

    # ---- hand-offs ----

    def publish_ring(self, step: int, ring: Any) -> None:
        with self.condition:
            self._rings[step] = ring
            self.condition.notify_all()

    def take_ring(self, step: int) -> Optional[Any]:
        """
        Wait for the OMS ring of `step` and permission to send it.

        Returns None when the job terminated before `step`.
        """
        self.wait_until(
            lambda: self.terminated_before(step)
            or (self.send_permit >= step and step in self._rings),
            f"send permit of step {step}",
        )
        with self.condition:
            if self.terminated_before(step):
                return None
            return self._rings.pop(step)

    def publish_inbound(self, step: int, inbound: Any) -> None:
        """Hand the IMS (or digest array) of messages sent in `step` to the computing unit."""
        with self.condition:
            self._inbound[step] = inbound
            self.condition.notify_all()

    def take_inbound(self, step: int) -> Any:
        with self.condition:
            return self._inbound.pop(step, None)

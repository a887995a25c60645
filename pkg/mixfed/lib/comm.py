"""Communication accounting between the parameter server and clients."""

from dataclasses import dataclass, field

BYTES_PER_REAL = 8


@dataclass
class CommLedger:
    """Cumulative bytes sent up (client to server) and down (server to client).

    A broadcast of r reals counts r once whatever the audience; uploads
    count once per sending client.
    """
    bytes_up: int = 0
    bytes_down: int = 0
    round_history: list[dict[str, int]] = field(default_factory=list)
    _round_up: int = 0
    _round_down: int = 0

    def record(self, up_reals: int = 0, down_reals: int = 0) -> None:
        if up_reals < 0 or down_reals < 0:
            raise ValueError(f"message sizes must be nonnegative, got up={up_reals} down={down_reals}")
        self.bytes_up += BYTES_PER_REAL * int(up_reals)
        self.bytes_down += BYTES_PER_REAL * int(down_reals)
        self._round_up += BYTES_PER_REAL * int(up_reals)
        self._round_down += BYTES_PER_REAL * int(down_reals)

    def absorb(self, other: "CommLedger") -> None:
        """Add another ledger's totals into the current round."""
        self.record(up_reals=other.bytes_up // BYTES_PER_REAL, down_reals=other.bytes_down // BYTES_PER_REAL)

    def finalize_round(self) -> dict[str, int]:
        """Close the current round and return its byte counts."""
        entry = {"bytes_up": self._round_up, "bytes_down": self._round_down}
        self.round_history.append(entry)
        self._round_up = 0
        self._round_down = 0
        return entry

    @property
    def total(self) -> int:
        return self.bytes_up + self.bytes_down

    def to_dict(self) -> dict[str, int]:
        return {"bytes_up": self.bytes_up, "bytes_down": self.bytes_down, "total": self.total}

    @classmethod
    def from_dict(cls, data: dict[str, int]) -> "CommLedger":
        return cls(bytes_up=int(data.get("bytes_up", 0)), bytes_down=int(data.get("bytes_down", 0)))


def phase1_anchor_round_reals(d: int, k: int, m: int, T1: int) -> tuple[int, int]:
    """(up, down) reals for one unfrozen anchor's FedMD round.

    Down: θ to the cohort, the start Q_0, the T1 post-round iterates and Û
    to the anchor. Up: T1 d×k messages from each of the m fresh clients and
    the anchor's updated θ.
    """
    down = (T1 + 2) * d * k + d
    up = T1 * m * d * k + d
    return up, down


def phase2_round_reals(d: int, k: int, M: int) -> tuple[int, int]:
    """(up, down) reals for one FedX round over M clients."""
    return M * (k * d + 1), k * d

"""Per-PE resource constants of the target platform."""

from dataclasses import dataclass, fields, replace

from snnswitch.errors import ConfigError


@dataclass(frozen=True)
class HardwareConstants:
    """Memory and array dimensions of one processing element.

    ``dtcm_bytes`` is the per-PE data memory available to compiled
    structures (96 kB). ``mac_rows`` x ``mac_cols`` is the MAC array
    layout that weight tiles are padded to.
    """

    dtcm_bytes: int = 96 * 1024
    mac_rows: int = 4
    mac_cols: int = 16
    serial_neuron_cap: int = 255
    weight_bits: int = 8
    hw_mgmt_bytes: int = 6000

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{f.name} must be an integer, got {value!r}")
        if self.mac_rows < 1 or self.mac_cols < 1:
            raise ConfigError("MAC array dimensions must be >= 1")
        if self.serial_neuron_cap < 1:
            raise ConfigError("serial_neuron_cap must be >= 1")
        if self.weight_bits != 8:
            raise ConfigError("only 8-bit weights are supported")
        if self.dtcm_bytes <= self.hw_mgmt_bytes:
            raise ConfigError("dtcm_bytes must exceed hw_mgmt_bytes")

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown hardware constant(s): {sorted(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_HW = HardwareConstants()


def pad_to(n, multiple):
    """Round ``n`` up to the next multiple of ``multiple`` (0 stays 0)."""
    return -(-n // multiple) * multiple

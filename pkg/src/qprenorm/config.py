"""Line-oriented key=value experiment configuration.

Values are typed on read: integers, floats, true/false, comma lists of
those, otherwise strings.  Floats are written with repr, so a file read
back reproduces the exact values.
"""

from dataclasses import dataclass, field

from .errors import ConfigError


def _parse_scalar(text):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "none":
        return None
    for kind in (int, float):
        try:
            return kind(t)
        except ValueError:
            pass
    return t


def parse_value(text):
    if "," in text:
        return tuple(_parse_scalar(x) for x in text.split(","))
    return _parse_scalar(text)


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError("empty lists cannot be written")
        return ",".join(format_value(v) for v in value)
    text = str(value)
    if "\n" in text:
        raise ConfigError(f"value {value!r} cannot be written on one line")
    if isinstance(value, str) and parse_value(text) != value:
        raise ConfigError(f"string {value!r} would be read back as another type")
    return text


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    out_dir: str = "."

    def to_text(self):
        lines = [f"command={self.command}", f"out_dir={self.out_dir}"]
        for k in sorted(self.params):
            lines.append(f"{k}={format_value(self.params[k])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, command=None):
        values = {}
        for num, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {num}: expected key=value, got {raw!r}")
            k, v = line.split("=", 1)
            k = k.strip().replace("-", "_")
            if not k.isidentifier():
                raise ConfigError(f"line {num}: bad key {k!r}")
            if k in values:
                raise ConfigError(f"line {num}: duplicate key {k!r}")
            values[k] = parse_value(v)
        cmd = values.pop("command", command)
        if cmd is None:
            raise ConfigError("configuration names no command")
        out_dir = values.pop("out_dir", ".")
        return cls(str(cmd), values, str(out_dir))


def load_config(path, command=None):
    try:
        with open(path) as fh:
            return ExperimentConfig.from_text(fh.read(), command)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def save_config(path, cfg):
    with open(path, "w") as fh:
        fh.write(cfg.to_text())

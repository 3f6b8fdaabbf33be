"""Container for experiment results."""
from dataclasses import dataclass, field


@dataclass
class ExperimentReport:
    """Structured result of one experiment run.

    ``cells`` are the rows of ``report.csv`` (dicts keyed by ``columns``);
    ``plotdata`` maps a short name to ``(columns, rows)`` for the
    ``plotdata_<name>.tsv`` files. ``config`` must be enough to rerun the
    experiment bit for bit.
    """

    name: str
    config: dict
    columns: tuple
    cells: list
    diagnostics: dict = field(default_factory=dict)
    plotdata: dict = field(default_factory=dict)
    runtime: float = 0.0

    def cell(self, **match):
        """First cell whose fields equal all of ``match``."""
        for c in self.cells:
            if all(c.get(k) == v for k, v in match.items()):
                return c
        raise KeyError(f"no cell matching {match}")

    def column(self, name):
        return [c[name] for c in self.cells]

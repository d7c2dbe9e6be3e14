"""
Export Service.
Writes phase diagrams, profiles, oracle tables and JSON reports with
provenance headers.
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO

from pydantic import BaseModel

from app.core.config import Settings, settings
from app.schemas.oracle import GroundStateProfile, OracleRow
from app.schemas.stability import PhaseDiagram, VerdictKind

logger = logging.getLogger(__name__)

PPM_COLORS = {
    VerdictKind.STABLE: (31, 119, 180),
    VerdictKind.UNSTABLE: (255, 215, 0),
    VerdictKind.NEAR_DEGENERATE: (128, 128, 128),
    VerdictKind.INCONCLUSIVE: (255, 255, 255),
}

ORACLE_COLUMNS = (
    "p", "theta", "z", "length_closed", "length_shot", "length_rel_err",
    "theta1_closed", "theta1_shot", "theta1_rel_err", "hamiltonian_drift",
)


def fmt(value: float) -> str:
    """Canonical float text: 17 significant digits, so a parse round-trips exactly."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.17g}"


class ExportService:
    """Service for writing result files."""

    def __init__(self, argv: Optional[Sequence[str]] = None, config: Settings = settings):
        self.config = config
        self.argv = list(argv or [])

    def provenance(self) -> Dict[str, object]:
        return {
            "tool": self.config.PROJECT_NAME,
            "version": self.config.VERSION,
            "command": " ".join(self.argv),
            "tolerances": self.config.tolerances(),
            "ranges": self.config.grid_ranges(),
        }

    def header_lines(self) -> List[str]:
        info = self.provenance()
        tolerances = " ".join(f"{k}={v!r}" for k, v in info["tolerances"].items())
        ranges = " ".join(f"{k}={v!r}" for k, v in info["ranges"].items())
        return [
            f"# {info['tool']} {info['version']}",
            f"# command: {info['command']}",
            f"# tolerances: {tolerances}",
            f"# ranges: {ranges}",
        ]

    def _write_text(self, path: Path, lines: List[str]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.header_lines() + lines) + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")

    def write_phase_csv(self, diagram: PhaseDiagram, path: Path) -> None:
        """Rows `p,lambda,verdict,dtheta_dlambda,lambda_star`, p-major then λ."""
        lines = ["p,lambda,verdict,dtheta_dlambda,lambda_star"]
        for p, lam_star, row in zip(diagram.p_grid, diagram.lambda_star, diagram.cells):
            for lam, verdict in zip(diagram.lambda_grid, row):
                lines.append(
                    f"{fmt(p)},{fmt(lam)},{verdict.kind.value},{fmt(verdict.dtheta_dlambda)},{fmt(lam_star)}"
                )
        self._write_text(path, lines)

    def write_phase_ppm(self, diagram: PhaseDiagram, path: Path) -> None:
        """
        Binary P6 raster: λ increases to the right, p increases upward.

        PPM must open with its magic number, so the provenance comments
        follow it inside the header.
        """
        width, height = len(diagram.lambda_grid), len(diagram.p_grid)
        header = "P6\n" + "\n".join(self.header_lines()) + f"\n{width} {height}\n255\n"
        pixels = bytearray()
        for row in reversed(diagram.cells):
            for verdict in row:
                pixels.extend(PPM_COLORS[verdict.kind])
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header.encode("ascii", errors="replace") + bytes(pixels))
        logger.info(f"Wrote {path} ({width}×{height})")

    def write_profile_csv(self, profile: GroundStateProfile, path: Path) -> None:
        lines = [f"# vertex_value={fmt(profile.vertex_value)} mass={fmt(profile.mass)}", "edge,x,u"]
        for edge in profile.edges:
            lines.extend(f"{edge.edge},{fmt(x)},{fmt(u)}" for x, u in zip(edge.x, edge.u))
        self._write_text(path, lines)

    def oracle_lines(self, rows: List[OracleRow]) -> List[str]:
        lines = [",".join(ORACLE_COLUMNS)]
        for row in rows:
            values = row.model_dump()
            lines.append(",".join(fmt(values[c]) for c in ORACLE_COLUMNS))
        return lines

    def write_oracle_csv(self, rows: List[OracleRow], path: Path) -> None:
        self._write_text(path, self.oracle_lines(rows))

    def json_document(self, payload: Dict[str, object]) -> str:
        """Serialise a report; models are dumped by alias and a provenance key is added."""
        document = {}
        for key, value in payload.items():
            if isinstance(value, BaseModel):
                value = json.loads(value.model_dump_json(by_alias=True))
            document[key] = value
        document["provenance"] = self.provenance()
        return json.dumps(document, indent=2, sort_keys=True, allow_nan=True)

    def write_json(self, payload: Dict[str, object], path: Optional[Path] = None, stream: Optional[TextIO] = None) -> None:
        text = self.json_document(payload)
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text + "\n", encoding="utf-8")
            logger.info(f"Wrote {path}")
        if stream is not None:
            stream.write(text + "\n")

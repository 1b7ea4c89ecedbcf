"""Per-source corpus converters into the unified QA-instance format."""

from elqa.converters.conll import CorefDocument, convert_coref, read_conll
from elqa.converters.sluice import SluiceRecord, convert_sluice, read_sluice_records
from elqa.converters.squad import convert_squad
from elqa.converters.stats import conversion_stats, render_stats
from elqa.converters.vpe import VpeRecord, convert_vpe, read_vpe_records, section_split

__all__ = [
    "SluiceRecord",
    "read_sluice_records",
    "convert_sluice",
    "VpeRecord",
    "read_vpe_records",
    "section_split",
    "convert_vpe",
    "CorefDocument",
    "read_conll",
    "convert_coref",
    "convert_squad",
    "conversion_stats",
    "render_stats",
]

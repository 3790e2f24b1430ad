from culturecolor.dataset.records import (
    DEFAULT_CATEGORIES,
    CategoryVocabulary,
    DatasetRecord,
    clean_keywords,
    load_dataset,
    save_dataset,
)
from culturecolor.dataset.extraction import (
    CandidateColors,
    CurationUnderflowError,
    curate_palette,
    extract_dominant_colors,
)
from culturecolor.dataset.stats import (
    HslStats,
    WelchResult,
    circular_std_deg,
    compute_hsl_stats,
    welch_t_test,
)

__all__ = [
    "DEFAULT_CATEGORIES",
    "CategoryVocabulary",
    "DatasetRecord",
    "clean_keywords",
    "load_dataset",
    "save_dataset",
    "CandidateColors",
    "CurationUnderflowError",
    "curate_palette",
    "extract_dominant_colors",
    "HslStats",
    "WelchResult",
    "circular_std_deg",
    "compute_hsl_stats",
    "welch_t_test",
]

"""Multimodal haptic rendering engine and study harness.

Subsystems: embedding-based material matching (`embeddings`), streaming
recognition (`recognition`), VLM temperature inference (`vlm`),
vibrotactile synthesis (`synth`, `playback`), Peltier simulation
(`thermal`), study statistics (`study`, `stats`), shipped fixtures
(`fixtures`), and the HTTP service plus CLI (`service`, `config`, `cli`).
"""

from .embeddings import (
    EmbeddingDatabase,
    MaterialRecord,
    MatchResult,
    build_database,
    cosine_similarity,
    load_database,
    match_material,
    save_database,
    top_k,
)
from .recognition import (
    FixtureEncoder,
    FrameDescriptor,
    MaskSpec,
    RecognitionEvent,
    RecognitionPipeline,
    RemoteEncoder,
    classify_frame,
    smooth_stream,
)
from .playback import PatternRegistry, PlaybackCommand, PlaybackEngine
from .stats import f_survival, paired_t_tests, rm_anova, rm_anova_oneway
from .study import (
    CONDITIONS,
    PatternCondition,
    SessionLog,
    TrialPlan,
    TrialRecord,
    confusion_matrix,
    generate_plan,
    summarize,
)
from .synth import HapticPattern, SampleBuffer, band_limit, default_pattern, export_wav, synthesize
from .thermal import PeltierConfig, ThermalSimulator, ThermalState, map_estimate_to_mode, set_mode, step
from .vlm import (
    TemperatureEstimate,
    TemperatureQuery,
    build_prompt,
    estimate_temperature,
    evaluate_tolerance,
    parse_temperature,
)

__version__ = "0.1.0"

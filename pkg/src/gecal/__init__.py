"""gecal: GEC edit-count fluency scoring and universal substitution attacks."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Corpus,
    ParallelExample,
    ReferenceEdit,
    Sentence,
    filter_incorrect,
    load_corpus,
    parse_m2,
    parse_parallel,
    save_corpus,
)
from .editmetric import (  # noqa: F401
    AlignOp,
    EditScore,
    EditSpan,
    EditStats,
    align,
    corpus_mean_edits,
    count_edits,
    extract_edits,
    score_corpus,
    score_edits,
)
from .postag import (  # noqa: F401
    FrequencyTable,
    PosLexicon,
    PosTag,
    TaggedToken,
    build_frequency_table,
    load_lexicon,
    tag_sentence,
    top_k_targets,
)
from .oracle import (  # noqa: F401
    GecOracle,
    HttpGecOracle,
    MockGecOracle,
    MockGecRules,
    QueryCache,
    RewriteRule,
    WireServer,
    cached,
    mock_correct,
)
from .attack import (  # noqa: F401
    CandidateVocab,
    DictionaryEntry,
    LearnerConfig,
    LearnTrajectory,
    SubstitutionDictionary,
    affected_subset,
    apply_dictionary,
    gender_preset,
    learn_dictionary,
    learn_substitution,
    load_dictionary,
    save_dictionary,
)
from .report import (  # noqa: F401
    EvalReport,
    SubsetStat,
    evaluate_attack,
    percent_change,
    render_report,
)
from .errors import (  # noqa: F401
    FingerprintMismatchError,
    FormatError,
    GecalError,
    OracleError,
    ProtocolError,
)

//! Tools for multilingual parallel texts: language tags, segmentation,
//! alignment, linguistic tables, generation from templates and MED dossiers.

pub mod align;
pub mod gentext;
pub mod langtags;
pub mod lingstore;
pub mod medbox;
pub mod segcore;
mod xml;
mod zipper;

pub use align::{align, parallel_granularity, AlignmentGroup, Entirety, EntiretySet, ParallelTexts};
pub use langtags::{check_labelling, FileLanguageMetadata, LanguageTag};
pub use lingstore::{LinguisticTable, Record, RecordId};
pub use medbox::Dossier;
pub use segcore::{
    segment_marked, segment_text, Coverage, Segment, SegmentKind, SegmentPath, SegmentationPolicy, SegmentedText,
    Span, TextGranularity,
};
pub use gentext::{generate, generate_all, parse_template, DocumentTemplate};

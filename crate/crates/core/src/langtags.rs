//! Two-letter language labels.
//!
//! Tags are ISO-639-1 alpha-2 codes plus three extensions for files that do
//! not carry a single natural language: `mm` (multilingual file), `un`
//! (undetermined) and `xx` (no linguistic content).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// ISO-639-1 alpha-2 snapshot, sorted so it can be binary searched.
const ISO_639_1: &[&str] = &[
    "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az", "ba", "be", "bg", "bh",
    "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce", "ch", "co", "cr", "cs", "cu", "cv", "cy", "da",
    "de", "dv", "dz", "ee", "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi", "fj", "fo", "fr",
    "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr", "ht", "hu", "hy", "hz",
    "ia", "id", "ie", "ig", "ii", "ik", "io", "is", "it", "iu", "ja", "jv", "ka", "kg", "ki", "kj",
    "kk", "kl", "km", "kn", "ko", "kr", "ks", "ku", "kv", "kw", "ky", "la", "lb", "lg", "li", "ln",
    "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml", "mn", "mr", "ms", "mt", "my", "na", "nb",
    "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv", "ny", "oc", "oj", "om", "or", "os", "pa", "pi",
    "pl", "ps", "pt", "qu", "rm", "rn", "ro", "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk",
    "sl", "sm", "sn", "so", "sq", "sr", "ss", "st", "su", "sv", "sw", "ta", "te", "tg", "th", "ti",
    "tk", "tl", "tn", "to", "tr", "ts", "tt", "tw", "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo",
    "wa", "wo", "xh", "yi", "yo", "za", "zh", "zu",
];

/// Code reserved for Malayalam, sometimes misused to label multilingual files.
pub const MALAYALAM: &str = "ml";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("malformed language label {0:?}: expected two ASCII letters")]
    Malformed(String),
    #[error("unknown language code {0:?}")]
    UnknownCode(String),
    #[error("no declared language; use `un` for undetermined content")]
    NothingDeclared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagKind {
    Standard,
    Multilingual,
    Undetermined,
    NoLinguisticContent,
}

/// A validated, lowercase two-letter language label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag([u8; 2]);

impl LanguageTag {
    pub const MULTILINGUAL: LanguageTag = LanguageTag(*b"mm");
    pub const UNDETERMINED: LanguageTag = LanguageTag(*b"un");
    pub const NEUTRAL: LanguageTag = LanguageTag(*b"xx");

    /// Parses a label, accepting any ASCII case.
    pub fn parse(raw: &str) -> Result<Self, LangError> {
        let bytes = raw.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(u8::is_ascii_alphabetic) {
            return Err(LangError::Malformed(raw.to_string()));
        }
        let code = [bytes[0].to_ascii_lowercase(), bytes[1].to_ascii_lowercase()];
        let tag = LanguageTag(code);
        if matches!(&code, b"mm" | b"un" | b"xx") || ISO_639_1.binary_search(&tag.as_str()).is_ok() {
            Ok(tag)
        } else {
            Err(LangError::UnknownCode(raw.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        // Only ever constructed from ASCII letters.
        std::str::from_utf8(&self.0).expect("ascii code")
    }

    pub fn kind(&self) -> TagKind {
        match &self.0 {
            b"mm" => TagKind::Multilingual,
            b"un" => TagKind::Undetermined,
            b"xx" => TagKind::NoLinguisticContent,
            _ => TagKind::Standard,
        }
    }

    pub fn is_standard(&self) -> bool {
        self.kind() == TagKind::Standard
    }

    pub fn is_neutral(&self) -> bool {
        self.kind() == TagKind::NoLinguisticContent
    }

    /// Every code the parser accepts, in lexicographic order.
    pub fn all() -> impl Iterator<Item = LanguageTag> {
        let mut codes: Vec<&str> = ISO_639_1.to_vec();
        codes.extend(["mm", "un", "xx"]);
        codes.sort_unstable();
        codes.into_iter().map(|c| LanguageTag::parse(c).expect("table entry"))
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LanguageTag({})", self.as_str())
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageTag {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageTag::parse(s)
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        LanguageTag::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated list such as `en,es`. Blank items are skipped.
pub fn parse_tag_list(raw: &str) -> Result<Vec<LanguageTag>, LangError> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let tag = LanguageTag::parse(item)?;
        if !out.contains(&tag) {
            out.push(tag);
        }
    }
    Ok(out)
}

/// Language(s) of a file, as opposed to the processing language at a point
/// inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileLanguageMetadata {
    declared: Vec<LanguageTag>,
    default_processing: Option<LanguageTag>,
}

impl FileLanguageMetadata {
    pub fn new(
        declared: impl IntoIterator<Item = LanguageTag>,
        default_processing: Option<LanguageTag>,
    ) -> Result<Self, LangError> {
        let mut list = Vec::new();
        for tag in declared {
            if !list.contains(&tag) {
                list.push(tag);
            }
        }
        if list.is_empty() {
            return Err(LangError::NothingDeclared);
        }
        Ok(FileLanguageMetadata { declared: list, default_processing })
    }

    pub fn declared(&self) -> &[LanguageTag] {
        &self.declared
    }

    pub fn default_processing(&self) -> Option<LanguageTag> {
        self.default_processing
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabellingDiagnostic {
    /// Content in a language the file metadata does not declare.
    Undeclared { language: LanguageTag },
    /// A declared language with no content in the file.
    Absent { language: LanguageTag },
    /// `ml` declared on content holding several languages.
    MalayalamMisuse { observed: usize },
    /// `mm` declared on content holding fewer than two languages.
    MultilingualMarkerOnMonolingual,
}

impl fmt::Display for LabellingDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabellingDiagnostic::Undeclared { language } => {
                write!(f, "content in `{language}` is not declared in the file metadata")
            }
            LabellingDiagnostic::Absent { language } => {
                write!(f, "declared language `{language}` does not occur in the content")
            }
            LabellingDiagnostic::MalayalamMisuse { observed } => write!(
                f,
                "`ml` is reserved for Malayalam but labels content in {observed} languages; use `mm` for multilingual files"
            ),
            LabellingDiagnostic::MultilingualMarkerOnMonolingual => {
                f.write_str("`mm` declared but the content holds fewer than two languages")
            }
        }
    }
}

/// Compares declared file languages with the processing languages actually
/// observed in the content.
///
/// `mm` is a marker, not a language: it is excluded from the set comparison
/// and only requires the content to hold at least two languages. When `ml`
/// stands in for "multilingual" a single diagnostic replaces the set
/// differences, since the intended declaration cannot be recovered.
pub fn check_labelling(
    meta: &FileLanguageMetadata,
    observed: &BTreeSet<LanguageTag>,
) -> Vec<LabellingDiagnostic> {
    let ml = LanguageTag::parse(MALAYALAM).expect("ml is in the table");
    let declared: BTreeSet<LanguageTag> = meta.declared.iter().copied().collect();

    let mut out = Vec::new();
    if declared.contains(&ml) && !observed.contains(&ml) && observed.len() > 1 {
        out.push(LabellingDiagnostic::MalayalamMisuse { observed: observed.len() });
        return out;
    }

    let multilingual = declared.contains(&LanguageTag::MULTILINGUAL);
    if multilingual && observed.len() < 2 {
        out.push(LabellingDiagnostic::MultilingualMarkerOnMonolingual);
    }
    for language in observed.difference(&declared) {
        out.push(LabellingDiagnostic::Undeclared { language: *language });
    }
    for language in declared.difference(observed) {
        if *language != LanguageTag::MULTILINGUAL {
            out.push(LabellingDiagnostic::Absent { language: *language });
        }
    }
    out
}

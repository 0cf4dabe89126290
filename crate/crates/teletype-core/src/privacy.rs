//! Privacy audit over serialized record bytes.
//!
//! The caller supplies the forbidden set: every identifier, string literal,
//! module name, and message fragment from the originating project. A record
//! passes when none of those strings (length >= 4) occurs in its bytes.

use std::collections::BTreeSet;

/// Forbidden strings shorter than this cannot be meaningfully detected in a
/// byte stream full of digits and are skipped.
pub const MIN_LEAK_LEN: usize = 4;

/// A forbidden substring found in serialized record bytes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("forbidden substring {offender:?} found in record bytes")]
pub struct PrivacyLeak {
    pub offender: String,
}

/// Scan serialized record bytes for project-derived strings.
///
/// Passes iff no forbidden string of length >= [`MIN_LEAK_LEN`] occurs in
/// `record_bytes`. On failure the first offender (in lexicographic order of
/// the forbidden set) is reported.
pub fn audit_privacy(record_bytes: &[u8], forbidden: &BTreeSet<String>) -> Result<(), PrivacyLeak> {
    for candidate in forbidden {
        if candidate.len() < MIN_LEAK_LEN {
            continue;
        }
        if contains_subslice(record_bytes, candidate.as_bytes()) {
            return Err(PrivacyLeak {
                offender: candidate.clone(),
            });
        }
    }
    Ok(())
}

fn contains_subslice(haystack: &[u8], needle: &[u8]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Every fixed token that may legitimately appear in a serialized record:
/// field names, enum tags, and error-kind tags. Forbidden-set builders use
/// this to drop candidates that are indistinguishable from schema text.
pub fn wire_vocabulary() -> Vec<String> {
    let mut vocab: Vec<String> = vec![
        "session_id".into(),
        "client_ts_ms".into(),
        "server_ts_ms".into(),
        "mode".into(),
        "reason".into(),
        "lines_total".into(),
        "lines_edit".into(),
        "overall.too_complex_total".into(),
        "corrupt".into(),
    ];
    for group in ["type_curr", "type_prev", "bg_curr", "bg_prev"] {
        for leaf in ["total", "module", "edit"] {
            vocab.push(format!("overall.{group}.{leaf}"));
        }
    }
    for mode in crate::record::Mode::ALL {
        vocab.push(mode.tag().into());
    }
    vocab.push("keystroke".into());
    vocab.push("module_switch".into());
    for kind in crate::kind::ErrorKind::ALL {
        vocab.push(format!("edit_kinds.{}.curr", kind.tag()));
        vocab.push(format!("edit_kinds.{}.prev", kind.tag()));
    }
    vocab
}

/// True when `candidate` occurs inside any fixed wire token, which makes it
/// useless as a leak witness (the bytes contain it for every record).
pub fn collides_with_vocabulary(candidate: &str) -> bool {
    wire_vocabulary().iter().any(|tok| tok.contains(candidate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn passes_when_project_names_are_absent() {
        let bytes = b"{\"session_id\":\"000000000000042\",\"lines_total\":10}";
        assert!(audit_privacy(bytes, &set(&["PlayerInventory"])).is_ok());
    }

    #[test]
    fn fails_on_planted_leak_and_names_the_offender() {
        let bytes = b"{\"mode\":\"nocheck\"} local x";
        let err = audit_privacy(bytes, &set(&["local x"])).unwrap_err();
        assert_eq!(err.offender, "local x");
    }

    #[test]
    fn empty_forbidden_set_always_passes() {
        assert!(audit_privacy(b"anything at all", &BTreeSet::new()).is_ok());
    }

    #[test]
    fn short_candidates_are_skipped() {
        assert!(audit_privacy(b"abc abc abc", &set(&["abc"])).is_ok());
    }

    #[test]
    fn vocabulary_collision_detection() {
        assert!(collides_with_vocabulary("strict"));
        assert!(collides_with_vocabulary("Mismatch"));
        assert!(!collides_with_vocabulary("PlayerInventory"));
    }
}

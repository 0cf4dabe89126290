//! Closed error taxonomy and the in-client error value.
//!
//! The vocabulary is fixed at 35 tags so a record can carry at most
//! 35 x 2 = 70 edit-range counters. 28 tags are meaningful; the rest are
//! reserved placeholders that keep the arithmetic honest without inventing
//! semantics for them.

use serde::{Deserialize, Serialize};

/// Number of distinct error tags in the closed vocabulary.
pub const KIND_COUNT: usize = 35;

/// Label for one analysis diagnostic. The set is closed: wire parsing
/// rejects anything outside it.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ErrorKind {
    TypeMismatch,
    SyntaxError,
    UnknownProperty,
    OnlyTablesCanHaveMethods,
    CannotExtendTable,
    TypesAreUnrelated,
    CountMismatch,
    IncorrectGenericParamCount,
    CodeTooComplex,
    GenericError,
    ExtraInformation,
    CannotCallNonFunction,
    CannotInferBinaryOperation,
    DuplicateTypeDefinition,
    FunctionDoesNotTakeSelf,
    FunctionExitsWithoutReturning,
    IllegalRequire,
    MissingProperties,
    ModuleHasCyclicDependency,
    NotATable,
    OccursCheckFailed,
    OptionalValueAccess,
    UnknownPropButFoundLikeProp,
    UnknownRequire,
    UnknownSymbol,
    MissingUnionProperty,
    NormalizationTooComplex,
    UnificationTooComplex,
    Reserved01,
    Reserved02,
    Reserved03,
    Reserved04,
    Reserved05,
    Reserved06,
    Reserved07,
}

impl ErrorKind {
    /// Every tag, in canonical (wire) order.
    pub const ALL: [ErrorKind; KIND_COUNT] = [
        ErrorKind::TypeMismatch,
        ErrorKind::SyntaxError,
        ErrorKind::UnknownProperty,
        ErrorKind::OnlyTablesCanHaveMethods,
        ErrorKind::CannotExtendTable,
        ErrorKind::TypesAreUnrelated,
        ErrorKind::CountMismatch,
        ErrorKind::IncorrectGenericParamCount,
        ErrorKind::CodeTooComplex,
        ErrorKind::GenericError,
        ErrorKind::ExtraInformation,
        ErrorKind::CannotCallNonFunction,
        ErrorKind::CannotInferBinaryOperation,
        ErrorKind::DuplicateTypeDefinition,
        ErrorKind::FunctionDoesNotTakeSelf,
        ErrorKind::FunctionExitsWithoutReturning,
        ErrorKind::IllegalRequire,
        ErrorKind::MissingProperties,
        ErrorKind::ModuleHasCyclicDependency,
        ErrorKind::NotATable,
        ErrorKind::OccursCheckFailed,
        ErrorKind::OptionalValueAccess,
        ErrorKind::UnknownPropButFoundLikeProp,
        ErrorKind::UnknownRequire,
        ErrorKind::UnknownSymbol,
        ErrorKind::MissingUnionProperty,
        ErrorKind::NormalizationTooComplex,
        ErrorKind::UnificationTooComplex,
        ErrorKind::Reserved01,
        ErrorKind::Reserved02,
        ErrorKind::Reserved03,
        ErrorKind::Reserved04,
        ErrorKind::Reserved05,
        ErrorKind::Reserved06,
        ErrorKind::Reserved07,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ErrorKind::TypeMismatch => "TypeMismatch",
            ErrorKind::SyntaxError => "SyntaxError",
            ErrorKind::UnknownProperty => "UnknownProperty",
            ErrorKind::OnlyTablesCanHaveMethods => "OnlyTablesCanHaveMethods",
            ErrorKind::CannotExtendTable => "CannotExtendTable",
            ErrorKind::TypesAreUnrelated => "TypesAreUnrelated",
            ErrorKind::CountMismatch => "CountMismatch",
            ErrorKind::IncorrectGenericParamCount => "IncorrectGenericParamCount",
            ErrorKind::CodeTooComplex => "CodeTooComplex",
            ErrorKind::GenericError => "GenericError",
            ErrorKind::ExtraInformation => "ExtraInformation",
            ErrorKind::CannotCallNonFunction => "CannotCallNonFunction",
            ErrorKind::CannotInferBinaryOperation => "CannotInferBinaryOperation",
            ErrorKind::DuplicateTypeDefinition => "DuplicateTypeDefinition",
            ErrorKind::FunctionDoesNotTakeSelf => "FunctionDoesNotTakeSelf",
            ErrorKind::FunctionExitsWithoutReturning => "FunctionExitsWithoutReturning",
            ErrorKind::IllegalRequire => "IllegalRequire",
            ErrorKind::MissingProperties => "MissingProperties",
            ErrorKind::ModuleHasCyclicDependency => "ModuleHasCyclicDependency",
            ErrorKind::NotATable => "NotATable",
            ErrorKind::OccursCheckFailed => "OccursCheckFailed",
            ErrorKind::OptionalValueAccess => "OptionalValueAccess",
            ErrorKind::UnknownPropButFoundLikeProp => "UnknownPropButFoundLikeProp",
            ErrorKind::UnknownRequire => "UnknownRequire",
            ErrorKind::UnknownSymbol => "UnknownSymbol",
            ErrorKind::MissingUnionProperty => "MissingUnionProperty",
            ErrorKind::NormalizationTooComplex => "NormalizationTooComplex",
            ErrorKind::UnificationTooComplex => "UnificationTooComplex",
            ErrorKind::Reserved01 => "Reserved01",
            ErrorKind::Reserved02 => "Reserved02",
            ErrorKind::Reserved03 => "Reserved03",
            ErrorKind::Reserved04 => "Reserved04",
            ErrorKind::Reserved05 => "Reserved05",
            ErrorKind::Reserved06 => "Reserved06",
            ErrorKind::Reserved07 => "Reserved07",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ErrorKind> {
        ErrorKind::ALL.iter().copied().find(|k| k.tag() == tag)
    }

    /// True for errors that signal the analyzer hit an internal work limit
    /// rather than finding a program fault.
    pub fn is_too_complex(self) -> bool {
        matches!(
            self,
            ErrorKind::CodeTooComplex
                | ErrorKind::NormalizationTooComplex
                | ErrorKind::UnificationTooComplex
        )
    }
}

impl std::fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Opaque module handle. Only ever compared and used as a map key; module
/// ids never appear in serialized telemetry.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ModuleId(pub String);

impl ModuleId {
    pub fn new(id: impl Into<String>) -> Self {
        ModuleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ModuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModuleId {
    fn from(s: &str) -> Self {
        ModuleId(s.to_string())
    }
}

/// One diagnostic from one analyzer invocation. Client-internal: these
/// values feed counters and are never serialized off the client.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnalysisError {
    pub kind: ErrorKind,
    pub module: ModuleId,
    /// 1-based inclusive line span of the blamed expression.
    pub start_line: u32,
    pub end_line: u32,
}

impl AnalysisError {
    pub fn new(kind: ErrorKind, module: impl Into<ModuleId>, start_line: u32, end_line: u32) -> Self {
        debug_assert!(start_line >= 1 && start_line <= end_line);
        AnalysisError {
            kind,
            module: module.into(),
            start_line,
            end_line,
        }
    }
}

impl From<String> for ModuleId {
    fn from(s: String) -> Self {
        ModuleId(s)
    }
}

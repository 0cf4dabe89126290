//! Inferred value types.
//!
//! `Top` admits no operations without a cast; `Dynamic` admits everything
//! silently. The data-model root is the only source of `Top`, and only for
//! the visible analysis; the background analysis types it `Dynamic`.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableType {
    pub fields: BTreeMap<String, SimpleType>,
    /// Sealed tables reject writes to fields they do not already have.
    /// Non-empty literals are sealed; `{}` stays open and accumulates.
    pub sealed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimpleType {
    Number,
    Str,
    Boolean,
    Nil,
    Table(TableType),
    Function { params: usize },
    Optional(Box<SimpleType>),
    Top,
    Dynamic,
}

impl SimpleType {
    pub fn sealed_table(fields: BTreeMap<String, SimpleType>) -> SimpleType {
        SimpleType::Table(TableType {
            fields,
            sealed: true,
        })
    }

    /// Acceptable as an arithmetic operand without complaint.
    pub fn is_numeric_ok(&self) -> bool {
        matches!(self, SimpleType::Number | SimpleType::Dynamic)
    }

    /// Coarse classification used for assignment compatibility.
    pub fn class(&self) -> TypeClass {
        match self {
            SimpleType::Number => TypeClass::Number,
            SimpleType::Str => TypeClass::Str,
            SimpleType::Boolean => TypeClass::Boolean,
            SimpleType::Nil => TypeClass::Nil,
            SimpleType::Table(_) => TypeClass::Table,
            SimpleType::Function { .. } => TypeClass::Function,
            SimpleType::Optional(inner) => inner.class(),
            SimpleType::Top => TypeClass::Top,
            SimpleType::Dynamic => TypeClass::Dynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeClass {
    Number,
    Str,
    Boolean,
    Nil,
    Table,
    Function,
    Top,
    Dynamic,
}

/// `optional(t)`, collapsing nested optionals and leaving nil/dynamic alone.
pub fn optional_of(t: SimpleType) -> SimpleType {
    match t {
        SimpleType::Nil | SimpleType::Dynamic | SimpleType::Optional(_) => t,
        other => SimpleType::Optional(Box::new(other)),
    }
}

/// Join two types observed on different control-flow paths.
pub fn merge(a: SimpleType, b: SimpleType) -> SimpleType {
    if a == b {
        return a;
    }
    use SimpleType::*;
    match (a, b) {
        (Dynamic, _) | (_, Dynamic) | (Top, _) | (_, Top) => Dynamic,
        (Nil, t) | (t, Nil) => optional_of(t),
        (Optional(x), y) | (y, Optional(x)) => {
            if *x == y {
                optional_of(y)
            } else {
                optional_of(merge(*x, y))
            }
        }
        (Table(t1), Table(t2)) => Table(merge_tables(t1, t2)),
        _ => Dynamic,
    }
}

fn merge_tables(a: TableType, b: TableType) -> TableType {
    let mut fields = BTreeMap::new();
    let mut b_fields = b.fields;
    for (name, ty_a) in a.fields {
        let merged = match b_fields.remove(&name) {
            Some(ty_b) => merge(ty_a, ty_b),
            None => optional_of(ty_a),
        };
        fields.insert(name, merged);
    }
    for (name, ty_b) in b_fields {
        fields.insert(name, optional_of(ty_b));
    }
    TableType {
        fields,
        sealed: a.sealed && b.sealed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_nil_write_makes_fields_optional() {
        assert_eq!(
            merge(SimpleType::Nil, SimpleType::Number),
            SimpleType::Optional(Box::new(SimpleType::Number))
        );
        assert_eq!(
            merge(SimpleType::Number, SimpleType::Nil),
            SimpleType::Optional(Box::new(SimpleType::Number))
        );
    }

    #[test]
    fn merge_is_stable_on_equal_types_and_absorbs_dynamic() {
        assert_eq!(merge(SimpleType::Str, SimpleType::Str), SimpleType::Str);
        assert_eq!(merge(SimpleType::Str, SimpleType::Dynamic), SimpleType::Dynamic);
    }

    #[test]
    fn optional_collapses() {
        let opt_num = optional_of(SimpleType::Number);
        assert_eq!(optional_of(opt_num.clone()), opt_num);
        assert_eq!(merge(opt_num.clone(), SimpleType::Number), opt_num);
    }

    #[test]
    fn table_merge_unions_fields_one_sided_become_optional() {
        let a = SimpleType::sealed_table(BTreeMap::from([(
            "hp".to_string(),
            SimpleType::Number,
        )]));
        let b = SimpleType::sealed_table(BTreeMap::from([(
            "sp".to_string(),
            SimpleType::Number,
        )]));
        match merge(a, b) {
            SimpleType::Table(t) => {
                assert_eq!(
                    t.fields["hp"],
                    SimpleType::Optional(Box::new(SimpleType::Number))
                );
                assert_eq!(
                    t.fields["sp"],
                    SimpleType::Optional(Box::new(SimpleType::Number))
                );
            }
            other => panic!("expected table, got {other:?}"),
        }
    }
}

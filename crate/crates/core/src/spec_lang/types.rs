use std::fmt;

/// Types of the specification language.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpecType {
    Bool,
    Nat,
    Int,
    /// Real-valued for verification; machine floats only appear in the interpreter.
    Float,
    Array(Box<SpecType>),
}

impl SpecType {
    pub fn array(elem: SpecType) -> Self {
        SpecType::Array(Box::new(elem))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, SpecType::Nat | SpecType::Int | SpecType::Float)
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, SpecType::Nat | SpecType::Int)
    }

    fn numeric_rank(&self) -> Option<u8> {
        match self {
            SpecType::Nat => Some(0),
            SpecType::Int => Some(1),
            SpecType::Float => Some(2),
            _ => None,
        }
    }

    /// Least common supertype under nat -> int -> float widening.
    pub fn join(&self, other: &SpecType) -> Option<SpecType> {
        match (self.numeric_rank(), other.numeric_rank()) {
            (Some(a), Some(b)) => Some(if a >= b { self.clone() } else { other.clone() }),
            _ => match (self, other) {
                (SpecType::Bool, SpecType::Bool) => Some(SpecType::Bool),
                (SpecType::Array(a), SpecType::Array(b)) => a.join(b).map(SpecType::array),
                _ => None,
            },
        }
    }

    /// Whether a value of type `other` may be stored where `self` is expected.
    pub fn accepts(&self, other: &SpecType) -> bool {
        match (self.numeric_rank(), other.numeric_rank()) {
            (Some(a), Some(b)) => b <= a,
            _ => match (self, other) {
                (SpecType::Bool, SpecType::Bool) => true,
                (SpecType::Array(a), SpecType::Array(b)) => a.accepts(b),
                _ => false,
            },
        }
    }

    pub fn element(&self) -> Option<&SpecType> {
        match self {
            SpecType::Array(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for SpecType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecType::Bool => write!(f, "bool"),
            SpecType::Nat => write!(f, "nat"),
            SpecType::Int => write!(f, "int"),
            SpecType::Float => write!(f, "float"),
            SpecType::Array(e) => write!(f, "array {e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Variant,
    Constant,
}

/// A typed name. Upper-case initial letters denote constants, everything else a variant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypedParam {
    pub name: String,
    pub ty: SpecType,
    pub kind: ParamKind,
}

pub fn is_constant_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl TypedParam {
    pub fn new(name: impl Into<String>, ty: SpecType) -> Self {
        let name = name.into();
        let kind = if is_constant_name(&name) {
            ParamKind::Constant
        } else {
            ParamKind::Variant
        };
        TypedParam { name, ty, kind }
    }

    pub fn is_constant(&self) -> bool {
        self.kind == ParamKind::Constant
    }
}

impl fmt::Display for TypedParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.name, self.ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening_order() {
        assert_eq!(SpecType::Nat.join(&SpecType::Float), Some(SpecType::Float));
        assert_eq!(SpecType::Int.join(&SpecType::Nat), Some(SpecType::Int));
        assert_eq!(SpecType::Bool.join(&SpecType::Int), None);
        assert!(SpecType::Float.accepts(&SpecType::Nat));
        assert!(!SpecType::Nat.accepts(&SpecType::Float));
        assert!(SpecType::array(SpecType::Int).accepts(&SpecType::array(SpecType::Nat)));
    }

    #[test]
    fn kind_follows_case() {
        assert!(TypedParam::new("N", SpecType::Float).is_constant());
        assert!(!TypedParam::new("x", SpecType::Float).is_constant());
        assert_eq!(TypedParam::new("a", SpecType::array(SpecType::Int)).to_string(), "(a:array int)");
    }
}

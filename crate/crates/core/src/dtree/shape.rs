use std::fmt;

use super::DtreeError;

/// The bare shape of a dtree, naming leaves by variable name.
///
/// Text form is parenthesized pairs, e.g. `(X1 (X2 (X3 Y)))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DtreeShape {
    Leaf(String),
    Node(Box<DtreeShape>, Box<DtreeShape>),
}

impl DtreeShape {
    pub fn node(left: DtreeShape, right: DtreeShape) -> Self {
        DtreeShape::Node(Box::new(left), Box::new(right))
    }

    pub fn leaf(name: impl Into<String>) -> Self {
        DtreeShape::Leaf(name.into())
    }

    pub fn parse(text: &str) -> Result<Self, DtreeError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let shape = parse_at(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(DtreeError::Syntax(format!(
                "unexpected `{}` after the root",
                tokens[pos]
            )));
        }
        Ok(shape)
    }

    /// Reads the nested `{"leaf": …}` / `{"left": …, "right": …}` form.
    /// Any other keys (cutset, context) are ignored.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, DtreeError> {
        if let Some(leaf) = value.get("leaf") {
            return leaf
                .as_str()
                .map(DtreeShape::leaf)
                .ok_or_else(|| DtreeError::Syntax("`leaf` must be a string".into()));
        }
        match (value.get("left"), value.get("right")) {
            (Some(l), Some(r)) => Ok(DtreeShape::node(
                DtreeShape::from_json(l)?,
                DtreeShape::from_json(r)?,
            )),
            _ => Err(DtreeError::Syntax(
                "expected an object with `leaf` or `left` and `right`".into(),
            )),
        }
    }
}

impl fmt::Display for DtreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtreeShape::Leaf(name) => f.write_str(name),
            DtreeShape::Node(l, r) => write!(f, "({l} {r})"),
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !ch.is_whitespace() {
                out.push(ch.to_string());
            }
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_at(tokens: &[String], pos: &mut usize) -> Result<DtreeShape, DtreeError> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| DtreeError::Syntax("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let left = parse_at(tokens, pos)?;
            let right = parse_at(tokens, pos)?;
            match tokens.get(*pos).map(String::as_str) {
                Some(")") => {
                    *pos += 1;
                    Ok(DtreeShape::node(left, right))
                }
                Some(other) => Err(DtreeError::Syntax(format!(
                    "internal nodes take exactly two children, found `{other}`"
                ))),
                None => Err(DtreeError::Syntax("missing `)`".into())),
            }
        }
        ")" => Err(DtreeError::Syntax("unexpected `)`".into())),
        name => Ok(DtreeShape::leaf(name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        let s = DtreeShape::parse("(A ((B C) D))").unwrap();
        assert_eq!(s.to_string(), "(A ((B C) D))");
        assert_eq!(DtreeShape::parse("A").unwrap(), DtreeShape::leaf("A"));
    }

    #[test]
    fn rejects_non_binary() {
        assert!(DtreeShape::parse("(A B C)").is_err());
        assert!(DtreeShape::parse("(A)").is_err());
        assert!(DtreeShape::parse("(A B").is_err());
        assert!(DtreeShape::parse("(A B) C").is_err());
    }

    #[test]
    fn json_form() {
        let v = serde_json::json!({"left": {"leaf": "A"}, "right": {"leaf": "B"}, "cutset": []});
        assert_eq!(
            DtreeShape::from_json(&v).unwrap(),
            DtreeShape::parse("(A B)").unwrap()
        );
        assert!(DtreeShape::from_json(&serde_json::json!({"left": {"leaf": "A"}})).is_err());
    }
}

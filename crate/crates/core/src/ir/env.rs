use std::collections::BTreeMap;

use super::parse::{syntax, Pos};
use super::ParseError;

/// Tensor name to combined shape.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShapeEnv(BTreeMap<String, Vec<usize>>);

impl ShapeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, dims: impl Into<Vec<usize>>) {
        self.0.insert(name.into(), dims.into());
    }

    pub fn with(mut self, name: impl Into<String>, dims: impl Into<Vec<usize>>) -> Self {
        self.insert(name, dims);
        self
    }

    pub fn get(&self, name: &str) -> Option<&[usize]> {
        self.0.get(name).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

impl<S: Into<String>, D: Into<Vec<usize>>> FromIterator<(S, D)> for ShapeEnv {
    fn from_iter<T: IntoIterator<Item = (S, D)>>(iter: T) -> Self {
        ShapeEnv(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// Parses `name: d0 d1 ... dk` lines. Blank lines and `#` comments are skipped.
pub fn parse_shape_env(text: &str) -> Result<ShapeEnv, ParseError> {
    let mut env = ShapeEnv::new();
    for (i, raw) in text.lines().enumerate() {
        let pos = Pos { line: i + 1, col: 1 };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, dims) = line
            .split_once(':')
            .ok_or_else(|| syntax(pos, "expected `name: d0 d1 ...`"))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(syntax(pos, format!("invalid tensor name `{name}`")));
        }
        let dims = dims
            .split_whitespace()
            .map(|d| match d.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(syntax(pos, format!("invalid dimension `{d}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        env.insert(name, dims);
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let env = parse_shape_env("# conv\nactivations: 1 2 8 8\n\nweights: 4 2 3 3\nscalar:\n").unwrap();
        assert_eq!(env.get("activations"), Some(&[1, 2, 8, 8][..]));
        assert_eq!(env.get("weights"), Some(&[4, 2, 3, 3][..]));
        assert_eq!(env.get("scalar"), Some(&[][..]));
    }

    #[test]
    fn rejects_zero_and_garbage() {
        assert!(parse_shape_env("a: 0").is_err());
        assert!(parse_shape_env("a 3").is_err());
        assert!(parse_shape_env("a: x").is_err());
    }
}

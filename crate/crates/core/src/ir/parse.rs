use thiserror::Error;

use super::{AccessPatternShape, Expr, Head, LitKind, Literal, Op, Operator, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown construct `{head}` at {line}:{col}")]
    UnknownHead { line: usize, col: usize, head: String },
    #[error("`{head}` at {line}:{col} takes {expected} operands, got {got}")]
    Arity {
        line: usize,
        col: usize,
        head: String,
        expected: usize,
        got: usize,
    },
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExp {
    Atom(String, Pos),
    List(Vec<SExp>, Pos),
}

impl SExp {
    pub fn pos(&self) -> Pos {
        match self {
            SExp::Atom(_, p) | SExp::List(_, p) => *p,
        }
    }
}

pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        col: pos.col,
        msg: msg.into(),
    }
}

enum Token {
    Open(Pos),
    Close(Pos),
    Atom(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open(pos));
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close(pos));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                col += s.chars().count();
                tokens.push(Token::Atom(s, pos));
                continue;
            }
        }
        col += 1;
    }
    tokens
}

/// Reads exactly one s-expression from `text`.
pub fn parse_sexp(text: &str) -> Result<SExp, ParseError> {
    let tokens = tokenize(text);
    let mut stack: Vec<(Vec<SExp>, Pos)> = Vec::new();
    let mut done: Option<SExp> = None;
    for tok in tokens {
        let item = match tok {
            Token::Open(p) => {
                stack.push((Vec::new(), p));
                continue;
            }
            Token::Close(p) => match stack.pop() {
                Some((items, open)) => SExp::List(items, open),
                None => return Err(syntax(p, "unmatched `)`")),
            },
            Token::Atom(s, p) => SExp::Atom(s, p),
        };
        match stack.last_mut() {
            Some((items, _)) => items.push(item),
            None if done.is_none() => done = Some(item),
            None => return Err(syntax(item.pos(), "trailing input after expression")),
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(syntax(open, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax(Pos { line: 1, col: 1 }, "empty input"))
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    expr_from_sexp(&parse_sexp(text)?)
}

fn expr_from_sexp(s: &SExp) -> Result<Expr, ParseError> {
    match s {
        SExp::Atom(name, pos) => {
            check_name(name, *pos)?;
            Ok(Expr::tensor(name.clone()))
        }
        SExp::List(items, pos) => {
            let (head, operands) = split_head(items, *pos)?;
            let mut children = Vec::new();
            let mut lits = Vec::new();
            for (slot, operand) in head.layout().iter().zip(operands) {
                match slot {
                    Slot::Child => children.push(expr_from_sexp(operand)?),
                    Slot::Lit(kind) => lits.push(parse_literal(*kind, operand)?),
                }
            }
            let op = Op::from_parts(head, &lits).expect("layout and literal kinds agree");
            Ok(Expr::new(op, children))
        }
    }
}

pub(crate) fn check_name(name: &str, pos: Pos) -> Result<(), ParseError> {
    if name.starts_with(|c: char| c.is_ascii_digit()) || name.starts_with('?') {
        return Err(syntax(pos, format!("expected a tensor name, found `{name}`")));
    }
    if Head::from_name(name).is_some() {
        return Err(syntax(pos, format!("`{name}` is a construct, not a tensor name")));
    }
    Ok(())
}

/// Resolves the head symbol of a list and checks the operand count.
pub(crate) fn split_head(items: &[SExp], pos: Pos) -> Result<(Head, &[SExp]), ParseError> {
    let (first, rest) = items
        .split_first()
        .ok_or_else(|| syntax(pos, "empty list"))?;
    let SExp::Atom(name, hpos) = first else {
        return Err(syntax(first.pos(), "expected a construct name"));
    };
    let head = Head::from_name(name).ok_or_else(|| ParseError::UnknownHead {
        line: hpos.line,
        col: hpos.col,
        head: name.clone(),
    })?;
    let expected = head.layout().len();
    if rest.len() != expected {
        return Err(ParseError::Arity {
            line: pos.line,
            col: pos.col,
            head: name.clone(),
            expected,
            got: rest.len(),
        });
    }
    Ok((head, rest))
}

fn nat(s: &SExp) -> Result<usize, ParseError> {
    match s {
        SExp::Atom(a, p) => a
            .parse::<usize>()
            .map_err(|_| syntax(*p, format!("expected a natural number, found `{a}`"))),
        SExp::List(_, p) => Err(syntax(*p, "expected a natural number, found a list")),
    }
}

fn tagged_list(s: &SExp, tag: &str, nonempty: bool, positive: bool) -> Result<Vec<usize>, ParseError> {
    let SExp::List(items, p) = s else {
        return Err(syntax(s.pos(), format!("expected `({tag} ...)`")));
    };
    match items.first() {
        Some(SExp::Atom(t, _)) if t == tag => {}
        _ => return Err(syntax(*p, format!("expected `({tag} ...)`"))),
    }
    let vals = items[1..].iter().map(nat).collect::<Result<Vec<_>, _>>()?;
    if nonempty && vals.is_empty() {
        return Err(syntax(*p, format!("`({tag})` needs at least one entry")));
    }
    if positive && vals.contains(&0) {
        return Err(syntax(*p, "dimensions must be positive"));
    }
    Ok(vals)
}

pub(crate) fn parse_literal(kind: LitKind, s: &SExp) -> Result<Literal, ParseError> {
    Ok(match kind {
        LitKind::Nat => Literal::Nat(nat(s)?),
        LitKind::Perm => Literal::List(tagged_list(s, "list", true, false)?),
        LitKind::Dims => Literal::List(tagged_list(s, "shape", true, true)?),
        LitKind::ApShape => {
            let SExp::List(items, p) = s else {
                return Err(syntax(s.pos(), "expected `(accessShape (shape ...) (shape ...))`"));
            };
            match items.as_slice() {
                [SExp::Atom(t, _), a, c] if t == "accessShape" => Literal::Shape(AccessPatternShape::new(
                    tagged_list(a, "shape", false, true)?,
                    tagged_list(c, "shape", false, true)?,
                )),
                _ => return Err(syntax(*p, "expected `(accessShape (shape ...) (shape ...))`")),
            }
        }
        LitKind::Operator => match s {
            SExp::Atom(a, p) => Literal::Operator(
                a.parse::<Operator>()
                    .map_err(|_| syntax(*p, format!("unknown operator `{a}`")))?,
            ),
            SExp::List(_, p) => return Err(syntax(*p, "expected an operator name")),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn access_literal() {
        let e = parse("(access weights 1)").unwrap();
        assert_eq!(e, Expr::access(Expr::tensor("weights"), 1));
    }

    #[test]
    fn dot_prod_of_cart_prod() {
        let e = parse("(compute dotProd (cartProd a b))").unwrap();
        assert_eq!(
            e,
            Expr::compute(
                Operator::DotProd,
                Expr::cart_prod(Expr::tensor("a"), Expr::tensor("b"))
            )
        );
    }

    #[test]
    fn missing_operand_is_arity_error() {
        let err = parse("(access x)").unwrap_err();
        assert!(matches!(err, ParseError::Arity { expected: 2, got: 1, .. }), "{err}");
    }

    #[test]
    fn unknown_head() {
        let err = parse("(foo x)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownHead { .. }));
    }

    #[test]
    fn error_positions() {
        let err = parse("(access\n  x y)").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 2,
                col: 5,
                msg: "expected a natural number, found `y`".into()
            }
        );
        let err = parse("(access x 1").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, col: 1, .. }));
        let err = parse("(access x 1))").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, col: 13, .. }));
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "; matmul\n(compute dotProd ; op\n  (cartProd (access a 1)\n    (transpose (access b 1) (list 1 0))))\n";
        let e = parse(text).unwrap();
        assert_eq!(
            e.pretty_print(),
            "(compute dotProd (cartProd (access a 1) (transpose (access b 1) (list 1 0))))"
        );
    }

    #[test]
    fn rejects_zero_dims_and_bad_names() {
        assert!(parse("(windows x (shape 0) (shape 1))").is_err());
        assert!(parse("(reshape x (accessShape (shape 2 0) (shape)))").is_err());
        assert!(parse("(pair x 3)").is_err());
        assert!(parse("access").is_err());
        assert!(parse("(compute mul x)").is_err());
    }

    #[test]
    fn empty_shapes_in_reshape() {
        let e = parse("(reshape x (accessShape (shape) (shape 6)))").unwrap();
        assert_eq!(e.op, Op::Reshape(AccessPatternShape::new([], [6])));
    }
}

//! A small closed-grammar expression language for metric components, vector
//! field components and leaf embeddings.
//!
//! Expressions are parsed once into an immutable tree. Binding the tree to an
//! ordered list of variable names produces a [`BoundExpr`] that evaluates on
//! any [`Scalar`]: plain `f64`, or a second-order [`Jet`] carrying gradient and
//! Hessian. Domain violations (division by zero, log or sqrt out of range)
//! are hard errors carrying the byte offset of the offending node.
//!
//! ```
//! use foliation_expr::Expression;
//!
//! let e = Expression::parse("sin(x)^2 + cos(x)^2").unwrap();
//! let v = e.evaluate(&[("x", 0.7)]).unwrap();
//! assert!((v - 1.0).abs() < 1e-15);
//! ```

mod ast;
mod eval;
pub mod jet;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use ast::{format_number, is_reserved, BinOp, Func, Node, NodeKind, Span};
pub use jet::{Jet, Scalar, MAX_VARS};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound symbol `{name}` at offset {offset}")]
    UnboundSymbol { name: String, offset: usize },
    #[error("domain error in `{op}` at offset {offset}: {detail}")]
    Domain {
        op: &'static str,
        offset: usize,
        detail: String,
    },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. }
            | ExprError::UnknownFunction { offset, .. }
            | ExprError::UnboundSymbol { offset, .. }
            | ExprError::Domain { offset, .. } => *offset,
        }
    }
}

/// A parsed scalar expression over named symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ExprError> {
        Ok(Expression {
            root: parse::Parser::parse(source)?,
        })
    }

    pub fn from_node(root: Node) -> Expression {
        Expression { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// A literal; negative values become a negated literal, as the parser
    /// would produce.
    pub fn number(v: f64) -> Expression {
        if v.is_sign_negative() {
            return Expression::negate(Expression::number(-v));
        }
        Expression::from_node(Node::new(NodeKind::Num(v), Span::default()))
    }

    pub fn symbol(name: &str) -> Expression {
        Expression::from_node(Node::new(NodeKind::Sym(name.to_string()), Span::default()))
    }

    pub fn binary(op: BinOp, lhs: Expression, rhs: Expression) -> Expression {
        Expression::from_node(Node::new(
            NodeKind::Binary(op, Box::new(lhs.root), Box::new(rhs.root)),
            Span::default(),
        ))
    }

    pub fn call(func: Func, arg: Expression) -> Expression {
        Expression::from_node(Node::new(NodeKind::Call(func, Box::new(arg.root)), Span::default()))
    }

    pub fn negate(arg: Expression) -> Expression {
        Expression::from_node(Node::new(NodeKind::Neg(Box::new(arg.root)), Span::default()))
    }

    /// Distinct symbols in order of first appearance.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.root.visit_symbols(&mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// Resolves every symbol to its position in `vars`.
    pub fn bind<S: AsRef<str>>(&self, vars: &[S]) -> Result<BoundExpr, ExprError> {
        let names: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let code = resolve(&self.root, &names)?;
        Ok(BoundExpr {
            source: self.clone(),
            code,
            vars: names.into(),
        })
    }

    /// Plain evaluation with named bindings.
    pub fn evaluate(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        let names: Vec<&str> = bindings.iter().map(|b| b.0).collect();
        let values: Vec<f64> = bindings.iter().map(|b| b.1).collect();
        self.bind(&names)?.eval(&values)
    }

    /// Value, gradient and Hessian with respect to the bound coordinates, in
    /// the order given.
    pub fn evaluate_jet2(&self, point: &[(&str, f64)]) -> Result<Jet, ExprError> {
        let names: Vec<&str> = point.iter().map(|b| b.0).collect();
        let values: Vec<f64> = point.iter().map(|b| b.1).collect();
        self.bind(&names)?.eval(&Jet::seed(&values))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, None)
    }
}

fn resolve(node: &Node, names: &[String]) -> Result<Node, ExprError> {
    let kind = match &node.kind {
        NodeKind::Sym(name) => {
            let idx = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| ExprError::UnboundSymbol {
                    name: name.clone(),
                    offset: node.span.start,
                })?;
            NodeKind::Var(idx)
        }
        NodeKind::Neg(a) => NodeKind::Neg(Box::new(resolve(a, names)?)),
        NodeKind::Call(f, a) => NodeKind::Call(*f, Box::new(resolve(a, names)?)),
        NodeKind::Binary(op, l, r) => {
            NodeKind::Binary(*op, Box::new(resolve(l, names)?), Box::new(resolve(r, names)?))
        }
        other => other.clone(),
    };
    Ok(Node::new(kind, node.span))
}

/// An expression whose symbols are resolved to argument slots.
#[derive(Clone, Debug)]
pub struct BoundExpr {
    source: Expression,
    code: Node,
    vars: Arc<[String]>,
}

impl BoundExpr {
    pub fn eval<S: Scalar>(&self, args: &[S]) -> Result<S, ExprError> {
        assert_eq!(args.len(), self.vars.len(), "argument count mismatch");
        eval::eval(&self.code, args)
    }

    pub fn expression(&self) -> &Expression {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }
}

impl fmt::Display for BoundExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.code.write(f, Some(&self.vars))
    }
}

pub fn parse(source: &str) -> Result<Expression, ExprError> {
    Expression::parse(source)
}

pub fn evaluate(expr: &Expression, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
    expr.evaluate(bindings)
}

pub fn evaluate_jet2(expr: &Expression, point: &[(&str, f64)]) -> Result<Jet, ExprError> {
    expr.evaluate_jet2(point)
}

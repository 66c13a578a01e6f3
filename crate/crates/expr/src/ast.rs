use std::fmt;

/// Byte range in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
            BinOp::Pow => PREC_POWER,
        }
    }
}

/// The closed set of built-in functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Whether `name` is reserved (a function name or `pi`).
pub fn is_reserved(name: &str) -> bool {
    name == "pi" || Func::from_name(name).is_some()
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Num(f64),
    Pi,
    Sym(String),
    /// A symbol resolved to an argument slot.
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

// Structural equality; spans are ignored.
impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        use NodeKind::*;
        match (&self.kind, &other.kind) {
            (Num(a), Num(b)) => a.to_bits() == b.to_bits(),
            (Pi, Pi) => true,
            (Sym(a), Sym(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Call(f1, a1), Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Node { kind, span }
    }

    /// True when the subtree contains no symbols.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            NodeKind::Num(_) | NodeKind::Pi => true,
            NodeKind::Sym(_) | NodeKind::Var(_) => false,
            NodeKind::Neg(a) | NodeKind::Call(_, a) => a.is_constant(),
            NodeKind::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            NodeKind::Num(v) if v.is_sign_negative() => PREC_UNARY,
            NodeKind::Num(_) | NodeKind::Pi | NodeKind::Sym(_) | NodeKind::Var(_) => PREC_ATOM,
            NodeKind::Call(..) => PREC_ATOM,
            NodeKind::Neg(_) => PREC_UNARY,
            NodeKind::Binary(op, ..) => op.precedence(),
        }
    }

    pub(crate) fn visit_symbols<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            NodeKind::Sym(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            NodeKind::Neg(a) | NodeKind::Call(_, a) => a.visit_symbols(out),
            NodeKind::Binary(_, l, r) => {
                l.visit_symbols(out);
                r.visit_symbols(out);
            }
            _ => {}
        }
    }

    pub(crate) fn write(&self, f: &mut fmt::Formatter<'_>, names: Option<&[String]>) -> fmt::Result {
        match &self.kind {
            NodeKind::Num(v) => write!(f, "{}", format_number(*v)),
            NodeKind::Pi => f.write_str("pi"),
            NodeKind::Sym(name) => f.write_str(name),
            NodeKind::Var(i) => match names.and_then(|n| n.get(*i)) {
                Some(name) => f.write_str(name),
                None => write!(f, "${i}"),
            },
            NodeKind::Neg(a) => {
                f.write_str("-")?;
                write_operand(a, PREC_UNARY, f, names)
            }
            NodeKind::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, names)?;
                f.write_str(")")
            }
            NodeKind::Binary(op, l, r) => match op {
                BinOp::Pow => {
                    write_operand(l, PREC_ATOM, f, names)?;
                    f.write_str("^")?;
                    write_operand(r, PREC_UNARY, f, names)
                }
                _ => {
                    let p = op.precedence();
                    write_operand(l, p, f, names)?;
                    write!(f, " {} ", op.symbol())?;
                    // left-associative: a right operand of equal precedence needs parens
                    write_operand(r, p + 1, f, names)
                }
            },
        }
    }
}

fn write_operand(
    node: &Node,
    min_prec: u8,
    f: &mut fmt::Formatter<'_>,
    names: Option<&[String]>,
) -> fmt::Result {
    if node.precedence() >= min_prec {
        node.write(f, names)
    } else {
        f.write_str("(")?;
        node.write(f, names)?;
        f.write_str(")")
    }
}

/// Shortest decimal that parses back to the same f64; exponent form for
/// very large or small magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

use crate::ast::{BinOp, Func, Node, NodeKind};
use crate::jet::Scalar;
use crate::ExprError;

const PI: f64 = std::f64::consts::PI;

fn domain(op: &'static str, node: &Node, detail: impl Into<String>) -> ExprError {
    ExprError::Domain {
        op,
        offset: node.span.start,
        detail: detail.into(),
    }
}

/// Evaluates a bound tree; `Sym` nodes are reported as unbound.
pub(crate) fn eval<S: Scalar>(node: &Node, args: &[S]) -> Result<S, ExprError> {
    match &node.kind {
        NodeKind::Num(v) => Ok(S::constant(*v)),
        NodeKind::Pi => Ok(S::constant(PI)),
        NodeKind::Var(i) => Ok(args[*i]),
        NodeKind::Sym(name) => Err(ExprError::UnboundSymbol {
            name: name.clone(),
            offset: node.span.start,
        }),
        NodeKind::Neg(a) => Ok(-eval(a, args)?),
        NodeKind::Call(func, a) => {
            let x = eval(a, args)?;
            apply(*func, x, node)
        }
        NodeKind::Binary(op, l, r) => {
            if *op == BinOp::Pow {
                return power(node, l, r, args);
            }
            let a = eval(l, args)?;
            let b = eval(r, args)?;
            Ok(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(domain("/", node, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => unreachable!(),
            })
        }
    }
}

fn apply<S: Scalar>(func: Func, x: S, node: &Node) -> Result<S, ExprError> {
    let v = x.value();
    Ok(match func {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Log => {
            if !(v > 0.0) {
                return Err(domain("log", node, format!("log of non-positive value {v}")));
            }
            x.ln()
        }
        Func::Sqrt => {
            if !(v >= 0.0) || (v == 0.0 && x.has_derivatives()) {
                return Err(domain("sqrt", node, format!("sqrt not differentiable/defined at {v}")));
            }
            x.sqrt()
        }
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
        Func::Tanh => x.tanh(),
        Func::Atan => x.atan(),
    })
}

fn power<S: Scalar>(node: &Node, base: &Node, exp: &Node, args: &[S]) -> Result<S, ExprError> {
    let b = eval(base, args)?;
    let bv = b.value();
    if exp.is_constant() {
        let p: f64 = eval::<f64>(exp, &[])?;
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            let n = p as i32;
            if n < 0 && bv == 0.0 {
                return Err(domain("^", node, "zero raised to a negative power"));
            }
            return Ok(b.powi(n));
        }
        if bv < 0.0 {
            return Err(domain("^", node, format!("negative base {bv} with non-integer exponent {p}")));
        }
        if bv == 0.0 && (p < 0.0 || (b.has_derivatives() && p < 2.0)) {
            return Err(domain("^", node, format!("zero base with exponent {p}")));
        }
        return Ok(b.powf(p));
    }
    if !(bv > 0.0) {
        return Err(domain("^", node, format!("non-positive base {bv} with variable exponent")));
    }
    let e = eval(exp, args)?;
    Ok((e * b.ln()).exp())
}

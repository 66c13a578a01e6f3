//! Vector-field germs: coordinate components carried as second-order jets
//! about a base point, so covariant derivatives, brackets and frame
//! derivatives come out exact to roundoff.

use std::ops::{Add, Mul, Neg, Sub};

use foliation_expr::Jet;

#[derive(Clone, Debug, PartialEq)]
pub struct JetVec(pub Vec<Jet>);

impl JetVec {
    pub fn zeros(dim: usize) -> JetVec {
        JetVec(vec![Jet::constant(0.0); dim])
    }

    /// A field with constant coordinate components.
    pub fn constant(components: &[f64]) -> JetVec {
        JetVec(components.iter().map(|&c| Jet::constant(c)).collect())
    }

    /// The `k`-th coordinate basis field.
    pub fn basis(dim: usize, k: usize) -> JetVec {
        let mut v = JetVec::zeros(dim);
        v.0[k] = Jet::constant(1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|j| j.value()).collect()
    }

    /// Drops derivatives: the constant-coefficient field agreeing at the base.
    pub fn detach(&self) -> JetVec {
        JetVec(self.0.iter().map(|j| j.detach()).collect())
    }

    pub fn order(&self) -> u8 {
        self.0.iter().map(|j| j.order()).min().unwrap_or(foliation_expr::jet::MAX_ORDER)
    }

    pub fn scale(&self, s: Jet) -> JetVec {
        JetVec(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn scale_f(&self, s: f64) -> JetVec {
        JetVec(self.0.iter().map(|&c| c * s).collect())
    }

    /// Directional derivative of each component along `dir` (coordinate
    /// derivative, no connection terms).
    pub fn derivative_along(&self, dir: &JetVec) -> JetVec {
        let m = self.dim();
        JetVec(
            (0..m)
                .map(|k| (0..m).map(|a| dir.0[a] * self.0[k].partial(a)).sum())
                .collect(),
        )
    }
}

impl Add for &JetVec {
    type Output = JetVec;
    fn add(self, rhs: &JetVec) -> JetVec {
        JetVec(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl Sub for &JetVec {
    type Output = JetVec;
    fn sub(self, rhs: &JetVec) -> JetVec {
        JetVec(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl Neg for &JetVec {
    type Output = JetVec;
    fn neg(self) -> JetVec {
        JetVec(self.0.iter().map(|&a| -a).collect())
    }
}

impl Mul<Jet> for &JetVec {
    type Output = JetVec;
    fn mul(self, rhs: Jet) -> JetVec {
        self.scale(rhs)
    }
}

/// A symmetric metric as jets, `g[a][b]`.
pub type JetMatrix = Vec<Vec<Jet>>;

pub fn inner(g: &JetMatrix, a: &JetVec, b: &JetVec) -> Jet {
    let m = a.dim();
    let mut s = Jet::constant(0.0);
    for i in 0..m {
        let mut row = Jet::constant(0.0);
        for j in 0..m {
            row += g[i][j] * b.0[j];
        }
        s += a.0[i] * row;
    }
    s
}

pub fn inner_values(g: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += g[i][j] * a[i] * b[j];
        }
    }
    s
}

/// Inverse by Gauss–Jordan elimination with partial pivoting on values.
/// Returns `None` for a numerically singular matrix.
pub fn invert(g: &JetMatrix) -> Option<JetMatrix> {
    let m = g.len();
    let mut a: Vec<Vec<Jet>> = g.clone();
    let mut inv: Vec<Vec<Jet>> = (0..m)
        .map(|i| (0..m).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = g
        .iter()
        .flat_map(|r| r.iter().map(|j| j.value().abs()))
        .fold(0.0, f64::max);
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .unwrap();
        if a[piv][col].value().abs() <= 1e-14 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..m {
            a[col][j] = a[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f.value() == 0.0 && !f.has_derivatives() {
                continue;
            }
            for j in 0..m {
                a[r][j] = a[r][j] - f * a[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_jet_matrix_has_correct_derivative() {
        // g(x) = [[1 + x^2, x], [x, 2]] at x = 0.3; d(g^-1) = -g^-1 dg g^-1
        let x = Jet::variable(0.3, 0, 1);
        let g = vec![
            vec![Jet::constant(1.0) + x * x, x],
            vec![x, Jet::constant(2.0)],
        ];
        let inv = invert(&g).unwrap();
        let gv = [[1.09, 0.3], [0.3, 2.0]];
        let det = gv[0][0] * gv[1][1] - gv[0][1] * gv[1][0];
        let iv = [[2.0 / det, -0.3 / det], [-0.3 / det, 1.09 / det]];
        let dg = [[0.6, 1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].value() - iv[i][j]).abs() < 1e-14);
                let mut d = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        d -= iv[i][k] * dg[k][l] * iv[l][j];
                    }
                }
                assert!((inv[i][j].grad(0) - d).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let g = vec![
            vec![Jet::constant(1.0), Jet::constant(2.0)],
            vec![Jet::constant(2.0), Jet::constant(4.0)],
        ];
        assert!(invert(&g).is_none());
    }
}

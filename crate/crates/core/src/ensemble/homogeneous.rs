//! Sequence probabilities for the homogeneous stripe ensemble:
//! `Pr(u1..ul) = psi[u1] prod(M/lambda) psi[ul]`.

use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::operator::{LinearOperator, SpectralSolution, TransferOperator};
use crate::scan::ContextShape;

/// Diagonal 0/1 matrix over stripe patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    diag: Vec<bool>,
}

impl Projection {
    pub fn identity(n: usize) -> Self {
        Projection { diag: vec![true; n] }
    }

    pub fn fix(n: usize, u: usize) -> Result<Self> {
        if u >= n {
            return Err(Error::InvalidProjection(format!("pattern {u} out of range for {n}")));
        }
        Ok(Self::from_fn(n, |v| v == u))
    }

    pub fn from_fn(n: usize, keep: impl Fn(usize) -> bool) -> Self {
        Projection {
            diag: (0..n).map(keep).collect(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut out = Vec::with_capacity(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            match x {
                0.0 => out.push(false),
                1.0 => out.push(true),
                _ => return Err(Error::InvalidProjection(format!("diagonal entry {i} is {x}, not 0 or 1"))),
            }
        }
        Ok(Projection { diag: out })
    }

    /// Row-major `n x n` matrix; must be diagonal with 0/1 entries.
    pub fn from_matrix(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidProjection(format!("expected {} entries", n * n)));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && data[i * n + j] != 0.0 {
                    return Err(Error::InvalidProjection(format!("off-diagonal entry ({i}, {j})")));
                }
            }
        }
        Self::from_diagonal(&(0..n).map(|i| data[i * n + i]).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn keeps(&self, u: usize) -> bool {
        self.diag[u]
    }

    fn apply(&self, x: &mut [f64]) {
        for (v, &k) in x.iter_mut().zip(&self.diag) {
            if !k {
                *v = 0.0;
            }
        }
    }
}

fn check_symmetric(op: &TransferOperator) -> Result<()> {
    if !op.spec().is_symmetric() {
        return Err(Error::InvalidArgument(
            "sequence probabilities need a symmetric interaction".into(),
        ));
    }
    Ok(())
}

/// `psi^T P1 (M/lambda) P2 ... Pl psi`.
pub fn projected_prob(sol: &SpectralSolution, op: &TransferOperator, projections: &[Projection]) -> Result<f64> {
    check_symmetric(op)?;
    let n = op.num_patterns();
    if projections.is_empty() {
        return Err(Error::InvalidProjection("need at least one position".into()));
    }
    if let Some(p) = projections.iter().find(|p| p.len() != n) {
        return Err(Error::InvalidProjection(format!("projection of size {}, operator has {n}", p.len())));
    }
    let mut x = sol.psi.clone();
    projections[0].apply(&mut x);
    let mut y = vec![0.0; n];
    for p in &projections[1..] {
        op.apply(&x, &mut y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / sol.lambda;
        }
        p.apply(&mut x);
    }
    Ok(dot(&x, &sol.psi))
}

/// `fixed[i] = Some(u)` pins position `i` to pattern `u`; `None` sums it out.
pub fn sequence_prob(sol: &SpectralSolution, op: &TransferOperator, fixed: &[Option<usize>]) -> Result<f64> {
    let n = op.num_patterns();
    let projections = fixed
        .iter()
        .map(|f| match f {
            Some(u) => Projection::fix(n, *u),
            None => Ok(Projection::identity(n)),
        })
        .collect::<Result<Vec<_>>>()?;
    projected_prob(sol, op, &projections)
}

/// Conditional table for the scan context computed along the other lattice
/// direction: `before + after` consecutive stripes, each contributing the
/// cells of rows `mid - 1` (previous line) and `mid` (current line) of that
/// column. Keys follow the scan-model layout. Needs `jh == jv`.
pub fn vertical_context_table(op: &TransferOperator, sol: &SpectralSolution, shape: ContextShape) -> Result<Vec<f64>> {
    let p = op.params();
    if p.jh != p.jv {
        return Err(Error::InvalidArgument("vertical context needs jh == jv".into()));
    }
    let (b, a) = (shape.before, shape.after);
    if a == 0 {
        return Err(Error::ShapeTooSmall { before: b, after: a });
    }
    let w = p.width;
    let mid = ContextShape::mid(w);
    if mid == 0 || mid >= w {
        return Err(Error::InvalidArgument(format!("width {w} too small")));
    }
    let n = op.num_patterns();
    let bit = |u: usize, row: usize| (u >> (w - 1 - row)) & 1;
    let mut table = Vec::with_capacity(shape.num_contexts());
    for key in 0..shape.num_contexts() {
        let before = key >> a;
        let after = key & ((1 << a) - 1);
        let mut joint = [0.0; 2];
        for (q, slot) in joint.iter_mut().enumerate() {
            let projections: Vec<Projection> = (0..b + a)
                .map(|col| {
                    Projection::from_fn(n, |u| {
                        let cur_ok = if col < b {
                            bit(u, mid) == (before >> (b - 1 - col)) & 1
                        } else if col == b {
                            bit(u, mid) == q
                        } else {
                            true
                        };
                        let prev_ok = col < b || bit(u, mid - 1) == (after >> (a - 1 - (col - b))) & 1;
                        cur_ok && prev_ok
                    })
                })
                .collect();
            *slot = projected_prob(sol, op, &projections)?;
        }
        let total = joint[0] + joint[1];
        table.push(if total > 0.0 { joint[1] / total } else { 0.5 });
    }
    Ok(table)
}

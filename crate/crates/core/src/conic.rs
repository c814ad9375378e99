//! A thin modeling layer over the Clarabel interior-point solver.
//!
//! Programs are built from real affine expressions over a flat vector of real
//! variables. Complex quantities are split into real and imaginary parts, and a
//! Hermitian PSD constraint on an `n × n` matrix is imposed through its real
//! embedding `[[Re, −Im], [Im, Re]] ⪰ 0` of size `2n`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;

use crate::error::{Block, Error, Result};
use crate::linalg::{CMatrix, CVector};

/// `constant + Σ coef · x[idx]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(idx: usize) -> Self {
        LinExpr {
            constant: 0.0,
            terms: vec![(idx, 1.0)],
        }
    }

    pub fn add_term(&mut self, idx: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((idx, coef));
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        self.constant += s * other.constant;
        for &(i, c) in &other.terms {
            self.add_term(i, s * c);
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, 1.0);
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, -1.0);
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.1 *= s;
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

/// A complex affine expression as a pair of real ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn constant(z: Complex64) -> Self {
        CExpr {
            re: LinExpr::constant(z.re),
            im: LinExpr::constant(z.im),
        }
    }

    /// Adds `c · e`.
    pub fn add_mul(&mut self, c: Complex64, e: &CExpr) {
        self.re.add_scaled(&e.re, c.re);
        self.re.add_scaled(&e.im, -c.im);
        self.im.add_scaled(&e.re, c.im);
        self.im.add_scaled(&e.im, c.re);
    }

    pub fn conj(&self) -> Self {
        CExpr {
            re: self.re.clone(),
            im: self.im.clone().scaled(-1.0),
        }
    }
}

/// A complex vector of fresh variables.
#[derive(Debug, Clone)]
pub struct ComplexVecVar {
    re: Vec<usize>,
    im: Vec<usize>,
}

impl ComplexVecVar {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn entry(&self, i: usize) -> CExpr {
        CExpr {
            re: LinExpr::var(self.re[i]),
            im: LinExpr::var(self.im[i]),
        }
    }

    /// `a^T x` for a constant vector `a`.
    pub fn dot_const(&self, a: &CVector) -> CExpr {
        let mut e = CExpr::default();
        for (i, &c) in a.iter().enumerate() {
            e.add_mul(c, &self.entry(i));
        }
        e
    }

    pub fn sum_squares_diag(&self) -> impl Iterator<Item = usize> + '_ {
        self.re.iter().chain(&self.im).cloned()
    }

    pub fn value(&self, x: &[f64]) -> CVector {
        CVector::from_iterator(
            self.len(),
            self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(x[r], x[i])),
        )
    }
}

/// An `n × n` Hermitian matrix of fresh variables: real parts on and above
/// the diagonal, imaginary parts strictly above it.
#[derive(Debug, Clone)]
pub struct HermitianVar {
    n: usize,
    re: Vec<usize>,
    im: Vec<usize>,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.n
    }

    // Packed position of (i, j), i <= j, in the upper triangle.
    fn pos(&self, i: usize, j: usize) -> usize {
        j * (j + 1) / 2 + i
    }

    pub fn entry(&self, i: usize, j: usize) -> CExpr {
        if i == j {
            return CExpr {
                re: LinExpr::var(self.re[self.pos(i, i)]),
                im: LinExpr::default(),
            };
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let p = self.pos(a, b);
        let im = LinExpr::var(self.im[p]);
        CExpr {
            re: LinExpr::var(self.re[p]),
            im: if i < j { im } else { im.scaled(-1.0) },
        }
    }

    /// `Tr(Q X)` restricted to the leading `q.nrows()` block, for Hermitian `Q`.
    pub fn trace_with(&self, q: &CMatrix) -> LinExpr {
        let m = q.nrows();
        let mut e = LinExpr::default();
        for j in 0..m {
            e.add_term(self.re[self.pos(j, j)], q[(j, j)].re);
            for i in 0..j {
                let p = self.pos(i, j);
                e.add_term(self.re[p], 2.0 * q[(i, j)].re);
                e.add_term(self.im[p], 2.0 * q[(i, j)].im);
            }
        }
        e
    }

    /// Entries `(0..j, j)` of column `j` as a vector variable.
    pub fn column_above(&self, j: usize) -> ComplexVecVar {
        let p: Vec<usize> = (0..j).map(|i| self.pos(i, j)).collect();
        ComplexVecVar {
            re: p.iter().map(|&q| self.re[q]).collect(),
            im: p.iter().map(|&q| self.im[q]).collect(),
        }
    }

    /// Trace of the leading `m × m` block.
    pub fn trace_leading(&self, m: usize) -> LinExpr {
        let mut e = LinExpr::default();
        for i in 0..m {
            e.add_term(self.re[self.pos(i, i)], 1.0);
        }
        e
    }

    pub fn value(&self, x: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| {
            let e = self.entry(i, j);
            Complex64::new(e.re.eval(x), e.im.eval(x))
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Cone {
    Zero,
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Debug, Default)]
pub struct Program {
    nvars: usize,
    blocks: Vec<(Cone, Vec<LinExpr>)>,
    objective: LinExpr,
    quadratic: Vec<(usize, f64)>,
}

/// Primal solution of a solved program.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    /// Value of the objective as posed (before any sign flip for maximization).
    pub objective: f64,
    pub status: String,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn scalar(&mut self) -> usize {
        self.nvars += 1;
        self.nvars - 1
    }

    pub fn complex_vec(&mut self, n: usize) -> ComplexVecVar {
        let re = (0..n).map(|_| self.scalar()).collect();
        let im = (0..n).map(|_| self.scalar()).collect();
        ComplexVecVar { re, im }
    }

    pub fn hermitian(&mut self, n: usize) -> HermitianVar {
        let packed = n * (n + 1) / 2;
        let re = (0..packed).map(|_| self.scalar()).collect();
        let im = (0..packed).map(|_| self.scalar()).collect();
        HermitianVar { n, re, im }
    }

    /// `e = 0`.
    pub fn equal(&mut self, e: LinExpr) {
        self.blocks.push((Cone::Zero, vec![e]));
    }

    /// `e ≥ 0`.
    pub fn nonneg(&mut self, e: LinExpr) {
        self.blocks.push((Cone::Nonneg, vec![e]));
    }

    /// `e[0] ≥ ‖e[1..]‖₂`.
    pub fn soc(&mut self, e: Vec<LinExpr>) {
        assert!(!e.is_empty());
        self.blocks.push((Cone::Soc, e));
    }

    /// `s² ≤ y`, written as `‖(2s, y − 1)‖ ≤ y + 1`.
    pub fn square_below(&mut self, s: LinExpr, y: &LinExpr) {
        let top = y.clone().plus(&LinExpr::constant(1.0));
        let bottom = y.clone().minus(&LinExpr::constant(1.0));
        self.soc(vec![top, s.scaled(2.0), bottom]);
    }

    /// The Hermitian matrix with entries `entry(i, j)` is PSD.
    pub fn hermitian_psd(&mut self, n: usize, entry: impl Fn(usize, usize) -> CExpr) {
        // Real embedding R = [[A, −B], [B, A]] with A + jB the Hermitian matrix.
        let real_entry = |r: usize, c: usize| -> LinExpr {
            let (bi, ii) = (r / n, r % n);
            let (bj, jj) = (c / n, c % n);
            let z = entry(ii, jj);
            match (bi, bj) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => z.im.scaled(-1.0),
                _ => z.im,
            }
        };
        let dim = 2 * n;
        let mut rows = Vec::with_capacity(dim * (dim + 1) / 2);
        for c in 0..dim {
            for r in 0..=c {
                let e = real_entry(r, c);
                rows.push(if r == c { e } else { e.scaled(std::f64::consts::SQRT_2) });
            }
        }
        self.blocks.push((Cone::Psd(dim), rows));
    }

    pub fn hermitian_var_psd(&mut self, h: &HermitianVar) {
        let hv = h.clone();
        self.hermitian_psd(h.n, move |i, j| hv.entry(i, j));
    }

    /// Adds `e` to the minimized objective.
    pub fn minimize(&mut self, e: &LinExpr) {
        self.objective.add_scaled(e, 1.0);
    }

    pub fn maximize(&mut self, e: &LinExpr) {
        self.objective.add_scaled(e, -1.0);
    }

    /// Adds `weight · x[idx]²` to the minimized objective.
    pub fn minimize_square(&mut self, idx: usize, weight: f64) {
        self.quadratic.push((idx, weight));
    }

    pub fn solve(&self, tol: f64, block: Block) -> Result<ConicSolution> {
        let n = self.nvars;
        let mut q = vec![0.0; n];
        for &(i, c) in &self.objective.terms {
            q[i] += c;
        }
        let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
        for &(i, w) in &self.quadratic {
            pi.push(i);
            pj.push(i);
            pv.push(2.0 * w);
        }
        let p = CscMatrix::new_from_triplets(n, n, pi, pj, pv);

        let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        for (cone, rows) in &self.blocks {
            for e in rows {
                let r = b.len();
                // Clarabel rows read s = b − A x with s in the cone.
                b.push(e.constant);
                for &(j, c) in &e.terms {
                    ai.push(r);
                    aj.push(j);
                    av.push(-c);
                }
            }
            let len = rows.len();
            let c = match *cone {
                Cone::Zero => SupportedConeT::ZeroConeT(len),
                Cone::Nonneg => SupportedConeT::NonnegativeConeT(len),
                Cone::Soc => SupportedConeT::SecondOrderConeT(len),
                Cone::Psd(d) => SupportedConeT::PSDTriangleConeT(d),
            };
            cones.push(c);
        }
        let a = CscMatrix::new_from_triplets(b.len(), n, ai, aj, av);

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .tol_feas(tol)
            .max_iter(300)
            .build()
            .map_err(|e| Error::Solver {
                block,
                status: format!("bad settings: {e:?}"),
            })?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| Error::Solver {
            block,
            status: format!("setup failed: {e:?}"),
        })?;
        solver.solve();
        let sol = &solver.solution;
        let status = format!("{:?}", sol.status);
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(ConicSolution {
                objective: sol.obj_val + self.objective.constant,
                x: sol.x.clone(),
                status,
            }),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Err(Error::ConicInfeasible { block, status })
            }
            _ => Err(Error::Solver { block, status }),
        }
    }
}

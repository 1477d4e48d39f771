//! State-space and LFT plumbing: systems, controllers, the Redheffer star
//! product, the Kreiss plant and the closed-loop state augmentation.
//!
//! Channel ordering for two-port plants is fixed as inputs `[w_δ, w, u]` and
//! outputs `[z_δ, z, y]`. After augmentation the control channel carries
//! `u_a = [ẋ_K; u]` and `y_a = [x_K; y]`, so the packed controller
//! `K_a = [A_K B_K; C_K D_K]` maps `y_a` to `u_a`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KreissError, Result};
use crate::matcore::{ensure_finite, ensure_square, to_complex, ComplexMatrix, RealMatrix};

/// Conditioning threshold above which an LFT inverse is declared singular.
pub const WELL_POSEDNESS_COND: f64 = 1e12;

/// Real LTI system `ẋ = Ax + Bu, y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: RealMatrix,
    b: RealMatrix,
    c: RealMatrix,
    d: RealMatrix,
}

impl StateSpace {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix, d: RealMatrix) -> Result<Self> {
        ensure_square(&a, "state matrix A")?;
        let n = a.nrows();
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(KreissError::Dimension(format!(
                "inconsistent blocks: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                n,
                n,
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
        ensure_finite(&d, "D")?;
        Ok(Self { a, b, c, d })
    }

    /// System with no inputs and no outputs.
    pub fn autonomous(a: RealMatrix) -> Result<Self> {
        let n = a.nrows();
        Self::new(
            a,
            RealMatrix::zeros(n, 0),
            RealMatrix::zeros(0, n),
            RealMatrix::zeros(0, 0),
        )
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }
    pub fn b(&self) -> &RealMatrix {
        &self.b
    }
    pub fn c(&self) -> &RealMatrix {
        &self.c
    }
    pub fn d(&self) -> &RealMatrix {
        &self.d
    }

    pub fn nstates(&self) -> usize {
        self.a.nrows()
    }
    pub fn ninputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn noutputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }

    /// Synthesis plants must have `D = 0`.
    pub fn require_strictly_proper(&self) -> Result<()> {
        if self.is_strictly_proper() {
            Ok(())
        } else {
            Err(KreissError::NonzeroFeedthrough)
        }
    }

    /// `C (sI - A)^{-1} B + D` at a complex point.
    pub fn evaluate(&self, s: Complex64) -> Result<ComplexMatrix> {
        let n = self.nstates();
        let mut m = to_complex(&-&self.a);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let x = m
            .lu()
            .solve(&to_complex(&self.b))
            .ok_or_else(|| KreissError::Numerical(format!("resolvent singular at s = {s}")))?;
        Ok(to_complex(&self.c) * x + to_complex(&self.d))
    }
}

/// Selector `J` of the plant states inside a closed-loop state vector:
/// `J = I_n` for `n_K = 0`, `J = [I_n, 0]ᵀ` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionJ {
    n: usize,
    n_k: usize,
}

impl ProjectionJ {
    pub fn new(n: usize, n_k: usize) -> Self {
        Self { n, n_k }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, n_k: 0 }
    }

    pub fn plant_states(&self) -> usize {
        self.n
    }
    pub fn controller_order(&self) -> usize {
        self.n_k
    }
    pub fn total(&self) -> usize {
        self.n + self.n_k
    }

    pub fn matrix(&self) -> RealMatrix {
        let mut j = RealMatrix::zeros(self.total(), self.n);
        for i in 0..self.n {
            j[(i, i)] = 1.0;
        }
        j
    }
}

/// Static (`order == 0`) or dynamic output-feedback controller stored in
/// packed form `K_a = [A_K B_K; C_K D_K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    order: usize,
    packed: RealMatrix,
}

impl Controller {
    pub fn static_gain(k: RealMatrix) -> Result<Self> {
        Self::from_packed(k, 0)
    }

    pub fn dynamic(
        a_k: RealMatrix,
        b_k: RealMatrix,
        c_k: RealMatrix,
        d_k: RealMatrix,
    ) -> Result<Self> {
        let nk = a_k.nrows();
        let (m, p) = d_k.shape();
        if !a_k.is_square()
            || b_k.shape() != (nk, p)
            || c_k.shape() != (m, nk)
        {
            return Err(KreissError::Dimension(format!(
                "controller blocks: A_K {}x{}, B_K {}x{}, C_K {}x{}, D_K {}x{}",
                a_k.nrows(),
                a_k.ncols(),
                b_k.nrows(),
                b_k.ncols(),
                c_k.nrows(),
                c_k.ncols(),
                m,
                p
            )));
        }
        let mut packed = RealMatrix::zeros(nk + m, nk + p);
        packed.view_mut((0, 0), (nk, nk)).copy_from(&a_k);
        packed.view_mut((0, nk), (nk, p)).copy_from(&b_k);
        packed.view_mut((nk, 0), (m, nk)).copy_from(&c_k);
        packed.view_mut((nk, nk), (m, p)).copy_from(&d_k);
        Self::from_packed(packed, nk)
    }

    pub fn from_packed(packed: RealMatrix, order: usize) -> Result<Self> {
        if packed.nrows() < order || packed.ncols() < order {
            return Err(KreissError::Dimension(format!(
                "packed controller {}x{} too small for order {order}",
                packed.nrows(),
                packed.ncols()
            )));
        }
        ensure_finite(&packed, "controller")?;
        Ok(Self { order, packed })
    }

    /// Zero controller of the given order for a plant with `m` inputs and `p` outputs.
    pub fn zeros(order: usize, m: usize, p: usize) -> Self {
        Self {
            order,
            packed: RealMatrix::zeros(order + m, order + p),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn is_static(&self) -> bool {
        self.order == 0
    }
    pub fn packed(&self) -> &RealMatrix {
        &self.packed
    }
    /// Number of plant inputs driven by the controller.
    pub fn noutputs(&self) -> usize {
        self.packed.nrows() - self.order
    }
    /// Number of plant measurements read by the controller.
    pub fn ninputs(&self) -> usize {
        self.packed.ncols() - self.order
    }

    pub fn a_k(&self) -> RealMatrix {
        self.packed.view((0, 0), (self.order, self.order)).into_owned()
    }
    pub fn b_k(&self) -> RealMatrix {
        self.packed
            .view((0, self.order), (self.order, self.ninputs()))
            .into_owned()
    }
    pub fn c_k(&self) -> RealMatrix {
        self.packed
            .view((self.order, 0), (self.noutputs(), self.order))
            .into_owned()
    }
    pub fn d_k(&self) -> RealMatrix {
        self.packed
            .view((self.order, self.order), (self.noutputs(), self.ninputs()))
            .into_owned()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.packed.as_slice().to_vec()
    }

    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.packed.len() {
            return Err(KreissError::Dimension(format!(
                "expected {} controller parameters, got {}",
                self.packed.len(),
                params.len()
            )));
        }
        Self::from_packed(
            RealMatrix::from_column_slice(self.packed.nrows(), self.packed.ncols(), params),
            self.order,
        )
    }
}

/// Closed-loop state matrix for `u = K y` (static) or the dynamic controller.
pub fn close_loop(plant: &StateSpace, k: &Controller) -> Result<StateSpace> {
    plant.require_strictly_proper()?;
    if k.noutputs() != plant.ninputs() || k.ninputs() != plant.noutputs() {
        return Err(KreissError::Dimension(format!(
            "controller is {}x{} (outputs x inputs), plant needs {}x{}",
            k.noutputs(),
            k.ninputs(),
            plant.ninputs(),
            plant.noutputs()
        )));
    }
    let n = plant.nstates();
    let nk = k.order();
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let mut acl = RealMatrix::zeros(n + nk, n + nk);
    acl.view_mut((0, 0), (n, n))
        .copy_from(&(a + b * k.d_k() * c));
    if nk > 0 {
        acl.view_mut((0, n), (n, nk)).copy_from(&(b * k.c_k()));
        acl.view_mut((n, 0), (nk, n)).copy_from(&(k.b_k() * c));
        acl.view_mut((n, n), (nk, nk)).copy_from(&k.a_k());
    }
    StateSpace::autonomous(acl)
}

/// Augmented matrices `A_a`, `B_a`, `C_a` with `A_cl = A_a + B_a K_a C_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub a_a: RealMatrix,
    pub b_a: RealMatrix,
    pub c_a: RealMatrix,
    pub order: usize,
    pub plant_states: usize,
}

impl Augmented {
    pub fn new(plant: &StateSpace, n_k: usize) -> Result<Self> {
        plant.require_strictly_proper()?;
        let n = plant.nstates();
        let (m, p) = (plant.ninputs(), plant.noutputs());
        let mut a_a = RealMatrix::zeros(n + n_k, n + n_k);
        a_a.view_mut((0, 0), (n, n)).copy_from(plant.a());
        let mut b_a = RealMatrix::zeros(n + n_k, n_k + m);
        b_a.view_mut((0, n_k), (n, m)).copy_from(plant.b());
        let mut c_a = RealMatrix::zeros(n_k + p, n + n_k);
        c_a.view_mut((n_k, 0), (p, n)).copy_from(plant.c());
        for i in 0..n_k {
            b_a[(n + i, i)] = 1.0;
            c_a[(i, n + i)] = 1.0;
        }
        Ok(Self {
            a_a,
            b_a,
            c_a,
            order: n_k,
            plant_states: n,
        })
    }

    pub fn closed_loop(&self, packed: &RealMatrix) -> RealMatrix {
        &self.a_a + &self.b_a * packed * &self.c_a
    }

    /// Pulls a gradient with respect to `A_cl` back to `K_a`.
    pub fn pullback(&self, grad_acl: &RealMatrix) -> RealMatrix {
        self.b_a.transpose() * grad_acl * self.c_a.transpose()
    }

    pub fn projection(&self) -> ProjectionJ {
        ProjectionJ::new(self.plant_states, self.order)
    }
}

/// Plant partitioned as inputs `[w_δ, w, u]` and outputs `[z_δ, z, y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortPlant {
    inner: StateSpace,
    n_delta: usize,
    n_w: usize,
    n_z: usize,
    n_u: usize,
    n_y: usize,
}

impl TwoPortPlant {
    pub fn new(
        inner: StateSpace,
        n_delta: usize,
        n_w: usize,
        n_z: usize,
        n_u: usize,
        n_y: usize,
    ) -> Result<Self> {
        if inner.ninputs() != n_delta + n_w + n_u || inner.noutputs() != n_delta + n_z + n_y {
            return Err(KreissError::Dimension(format!(
                "channel dims ({n_delta},{n_w},{n_u}) -> ({n_delta},{n_z},{n_y}) do not partition a {}x{} system",
                inner.noutputs(),
                inner.ninputs()
            )));
        }
        Ok(Self {
            inner,
            n_delta,
            n_w,
            n_z,
            n_u,
            n_y,
        })
    }

    pub fn inner(&self) -> &StateSpace {
        &self.inner
    }
    pub fn uncertainty_dim(&self) -> usize {
        self.n_delta
    }
    pub fn performance_dims(&self) -> (usize, usize) {
        (self.n_w, self.n_z)
    }
    pub fn control_dims(&self) -> (usize, usize) {
        (self.n_u, self.n_y)
    }

    /// State-space realization of `w → z` for `δI ⋆ P ⋆ K`. The control loop
    /// is closed first, then the uncertainty loop `w_δ = δ z_δ`. Returns
    /// `None` at `δ = -1`, where the interconnection is the zero map.
    pub fn close(&self, delta: f64, k: Option<&RealMatrix>) -> Result<Option<StateSpace>> {
        let (a, b, c, d) = (self.inner.a(), self.inner.b(), self.inner.c(), self.inner.d());
        let nd = self.n_delta;
        let (nw, nz, nu, ny) = (self.n_w, self.n_z, self.n_u, self.n_y);
        let ni = nd + nw;
        let no = nd + nz;

        // Control loop: u = F (C2 x + D21 w1), F = (I - K D22)^{-1} K.
        let (mut a1, mut b1, mut c1, mut d1) = (
            a.clone(),
            b.columns(0, ni).into_owned(),
            c.rows(0, no).into_owned(),
            d.view((0, 0), (no, ni)).into_owned(),
        );
        if let Some(k) = k {
            if k.shape() != (nu, ny) {
                return Err(KreissError::Dimension(format!(
                    "controller must be {nu}x{ny}, got {}x{}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            let b2 = b.columns(ni, nu);
            let c2 = c.rows(no, ny);
            let d12 = d.view((0, ni), (no, nu));
            let d21 = d.view((no, 0), (ny, ni));
            let d22 = d.view((no, ni), (ny, nu));
            let f = guarded_real_inverse(&(RealMatrix::identity(nu, nu) - k * d22))? * k;
            a1 += b2 * &f * c2;
            b1 += b2 * &f * d21;
            c1 += d12 * &f * c2;
            d1 += d12 * &f * d21;
        }
        if delta == -1.0 {
            return Ok(None);
        }

        // Uncertainty loop: w_δ = G (C_δ x + D_δw w), G = δ (I - δ D_δδ)^{-1}.
        let d_dd = d1.view((0, 0), (nd, nd));
        let g = guarded_real_inverse(&(RealMatrix::identity(nd, nd) - d_dd * delta))? * delta;
        let b_d = b1.columns(0, nd);
        let b_w = b1.columns(nd, nw);
        let c_d = c1.rows(0, nd);
        let c_z = c1.rows(nd, nz);
        let d_dw = d1.view((0, nd), (nd, nw));
        let d_zd = d1.view((nd, 0), (nz, nd));
        let d_zw = d1.view((nd, nd), (nz, nw));
        let a2 = &a1 + b_d * &g * c_d;
        let b2 = b_w + b_d * &g * d_dw;
        let c2 = c_z + d_zd * &g * c_d;
        let d2 = d_zw + d_zd * &g * d_dw;
        StateSpace::new(a2, b2, c2, d2).map(Some)
    }

    /// Transfer `w → z` of `δI ⋆ P ⋆ K` at `s = jω`, closing the control
    /// channel with `k` (when present) and the uncertainty channel with `δI`.
    /// At `δ = -1` the result is the zero matrix by convention.
    pub fn closed_transfer(
        &self,
        delta: f64,
        k: Option<&RealMatrix>,
        omega: f64,
    ) -> Result<ComplexMatrix> {
        if delta == -1.0 {
            return Ok(ComplexMatrix::zeros(self.n_z, self.n_w));
        }
        let p = self.inner.evaluate(Complex64::new(0.0, omega))?;
        let upper_rows = self.n_delta + self.n_z;
        let upper_cols = self.n_delta + self.n_w;
        let inner = match k {
            Some(k) => {
                if k.shape() != (self.n_u, self.n_y) {
                    return Err(KreissError::Dimension(format!(
                        "controller must be {}x{}, got {}x{}",
                        self.n_u,
                        self.n_y,
                        k.nrows(),
                        k.ncols()
                    )));
                }
                lower_lft(&Partitioned::new(p, upper_rows, upper_cols)?, &to_complex(k))?
            }
            None => p.view((0, 0), (upper_rows, upper_cols)).into_owned(),
        };
        let delta_block = ComplexMatrix::identity(self.n_delta, self.n_delta) * Complex64::new(delta, 0.0);
        upper_lft(
            &delta_block,
            &Partitioned::new(inner, self.n_delta, self.n_delta)?,
        )
    }
}

/// A complex matrix split into a 2x2 block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitioned {
    mat: ComplexMatrix,
    row_split: usize,
    col_split: usize,
}

impl Partitioned {
    pub fn new(mat: ComplexMatrix, row_split: usize, col_split: usize) -> Result<Self> {
        if row_split > mat.nrows() || col_split > mat.ncols() {
            return Err(KreissError::Dimension(format!(
                "split ({row_split},{col_split}) outside {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self {
            mat,
            row_split,
            col_split,
        })
    }

    /// Treats the whole matrix as the `(1,1)` block.
    pub fn upper_only(mat: ComplexMatrix) -> Self {
        let (r, c) = mat.shape();
        Self {
            mat,
            row_split: r,
            col_split: c,
        }
    }

    /// Treats the whole matrix as the `(2,2)` block.
    pub fn lower_only(mat: ComplexMatrix) -> Self {
        Self {
            mat,
            row_split: 0,
            col_split: 0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }
    pub fn splits(&self) -> (usize, usize) {
        (self.row_split, self.col_split)
    }

    fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let (r, c) = self.mat.shape();
        let (r0, nr) = if i == 0 {
            (0, self.row_split)
        } else {
            (self.row_split, r - self.row_split)
        };
        let (c0, nc) = if j == 0 {
            (0, self.col_split)
        } else {
            (self.col_split, c - self.col_split)
        };
        self.mat.view((r0, c0), (nr, nc)).into_owned()
    }
}

fn guarded_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    let sv = crate::matcore::singular_values(m);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smin == 0.0 || smax / smin > WELL_POSEDNESS_COND {
        return Err(KreissError::IllPosed(if smin == 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        }));
    }
    m.clone()
        .try_inverse()
        .ok_or(KreissError::IllPosed(f64::INFINITY))
}

fn guarded_real_inverse(m: &RealMatrix) -> Result<RealMatrix> {
    guarded_inverse(&to_complex(m)).map(|inv| inv.map(|v| v.re))
}

/// Redheffer star product `M ⋆ N`.
pub fn star(m: &Partitioned, n: &Partitioned) -> Result<Partitioned> {
    let (m11, m12, m21, m22) = (m.block(0, 0), m.block(0, 1), m.block(1, 0), m.block(1, 1));
    let (n11, n12, n21, n22) = (n.block(0, 0), n.block(0, 1), n.block(1, 0), n.block(1, 1));
    if m22.ncols() != n11.nrows() || m22.nrows() != n11.ncols() {
        return Err(KreissError::Dimension(format!(
            "star product: M22 is {}x{}, N11 is {}x{}",
            m22.nrows(),
            m22.ncols(),
            n11.nrows(),
            n11.ncols()
        )));
    }
    let k = m22.nrows();
    let l = m22.ncols();
    let inv_mn = guarded_inverse(&(ComplexMatrix::identity(k, k) - &m22 * &n11))?;
    let inv_nm = guarded_inverse(&(ComplexMatrix::identity(l, l) - &n11 * &m22))?;

    let tl = &m11 + &m12 * &n11 * &inv_mn * &m21;
    let tr = &m12 * &inv_nm * &n12;
    let bl = &n21 * &inv_mn * &m21;
    let br = &n22 + &n21 * &m22 * &inv_nm * &n12;

    let rows = tl.nrows() + bl.nrows();
    let cols = tl.ncols() + tr.ncols();
    let mut out = DMatrix::zeros(rows, cols);
    out.view_mut((0, 0), tl.shape()).copy_from(&tl);
    out.view_mut((0, tl.ncols()), tr.shape()).copy_from(&tr);
    out.view_mut((tl.nrows(), 0), bl.shape()).copy_from(&bl);
    out.view_mut((tl.nrows(), tl.ncols()), br.shape()).copy_from(&br);
    Partitioned::new(out, tl.nrows(), tl.ncols())
}

/// Lower LFT `M ⋆ N = M11 + M12 N (I - M22 N)^{-1} M21`.
pub fn lower_lft(m: &Partitioned, n: &ComplexMatrix) -> Result<ComplexMatrix> {
    let out = star(m, &Partitioned::upper_only(n.clone()))?;
    Ok(out.block(0, 0))
}

/// Upper LFT `N ⋆ M = M22 + M21 N (I - M11 N)^{-1} M12`.
pub fn upper_lft(n: &ComplexMatrix, m: &Partitioned) -> Result<ComplexMatrix> {
    let out = star(&Partitioned::lower_only(n.clone()), m)?;
    Ok(out.block(1, 1))
}

/// The Kreiss substitution template `Q = [-I √2 I; -√2 I I]` of size `2n`,
/// with `δI ⋆ Q = (1-δ)/(1+δ) I`.
pub fn kreiss_template(n: usize) -> Partitioned {
    let r2 = std::f64::consts::SQRT_2;
    let mut q = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        q[(i, i)] = Complex64::new(-1.0, 0.0);
        q[(i, n + i)] = Complex64::new(r2, 0.0);
        q[(n + i, i)] = Complex64::new(-r2, 0.0);
        q[(n + i, n + i)] = Complex64::new(1.0, 0.0);
    }
    Partitioned {
        mat: q,
        row_split: n,
        col_split: n,
    }
}

/// Plant `P(s)` with `δI ⋆ P = Jᵀ(sI - ((1-δ)/(1+δ) A - I))^{-1} J`.
pub fn build_kreiss_plant(a: &RealMatrix, j: ProjectionJ) -> Result<TwoPortPlant> {
    ensure_square(a, "Kreiss plant A")?;
    let nt = a.nrows();
    if nt != j.total() {
        return Err(KreissError::Dimension(format!(
            "A is {nt}x{nt} but J expects {} states",
            j.total()
        )));
    }
    let n = j.plant_states();
    let jm = j.matrix();
    let r2 = std::f64::consts::SQRT_2;
    let ident = RealMatrix::identity(nt, nt);

    let mut b = RealMatrix::zeros(nt, nt + n);
    b.view_mut((0, 0), (nt, nt)).copy_from(&(&ident * r2));
    b.view_mut((0, nt), (nt, n)).copy_from(&jm);
    let mut c = RealMatrix::zeros(nt + n, nt);
    c.view_mut((0, 0), (nt, nt)).copy_from(&(a * -r2));
    c.view_mut((nt, 0), (n, nt)).copy_from(&jm.transpose());
    let mut d = RealMatrix::zeros(nt + n, nt + n);
    d.view_mut((0, 0), (nt, nt)).copy_from(&-&ident);

    let inner = StateSpace::new(a - &ident, b, c, d)?;
    TwoPortPlant::new(inner, nt, n, n, 0, 0)
}

/// Augmented Kreiss plant `P_a` with `δI ⋆ P_a ⋆ K_a` equal to the closed-loop
/// restricted Kreiss transfer.
pub fn augment(plant: &StateSpace, n_k: usize) -> Result<TwoPortPlant> {
    let aug = Augmented::new(plant, n_k)?;
    let n = plant.nstates();
    let nt = n + n_k;
    let (nu, ny) = (aug.b_a.ncols(), aug.c_a.nrows());
    let jm = aug.projection().matrix();
    let r2 = std::f64::consts::SQRT_2;
    let ident = RealMatrix::identity(nt, nt);

    let mut b = RealMatrix::zeros(nt, nt + n + nu);
    b.view_mut((0, 0), (nt, nt)).copy_from(&(&ident * r2));
    b.view_mut((0, nt), (nt, n)).copy_from(&jm);
    b.view_mut((0, nt + n), (nt, nu)).copy_from(&aug.b_a);

    let mut c = RealMatrix::zeros(nt + n + ny, nt);
    c.view_mut((0, 0), (nt, nt)).copy_from(&(&aug.a_a * -r2));
    c.view_mut((nt, 0), (n, nt)).copy_from(&jm.transpose());
    c.view_mut((nt + n, 0), (ny, nt)).copy_from(&aug.c_a);

    let mut d = RealMatrix::zeros(nt + n + ny, nt + n + nu);
    d.view_mut((0, 0), (nt, nt)).copy_from(&-&ident);
    d.view_mut((0, nt + n), (nt, nu)).copy_from(&(&aug.b_a * -r2));

    let inner = StateSpace::new(&aug.a_a - &ident, b, c, d)?;
    TwoPortPlant::new(inner, nt, n, n, nu, ny)
}

/// Direct evaluation of `Jᵀ(jωI - ((1-δ)/(1+δ) A - I))^{-1} J`.
pub fn kreiss_resolvent(a: &RealMatrix, j: ProjectionJ, delta: f64, omega: f64) -> Result<ComplexMatrix> {
    let n = j.plant_states();
    if delta == -1.0 {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let scale = (1.0 - delta) / (1.0 + delta);
    let nt = a.nrows();
    let mut m = to_complex(&(a * -scale));
    for i in 0..nt {
        m[(i, i)] += Complex64::new(1.0, omega);
    }
    let jc = to_complex(&j.matrix());
    let x = m
        .lu()
        .solve(&jc)
        .ok_or_else(|| KreissError::Numerical("singular resolvent".into()))?;
    Ok(jc.transpose() * x)
}

//! Laguerre-Gauss mode fields of the infinite parabolic profile and their
//! overlap integrals on a fixed polar quadrature grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{FiberSpec, LpMode, ModeBasis, Orientation};

/// Radial Gauss-Legendre nodes.
pub const DEFAULT_RADIAL_NODES: usize = 160;
/// Uniform azimuthal nodes; exact for trigonometric products below this degree.
pub const DEFAULT_AZIMUTH_NODES: usize = 64;
/// Radial extent in units of the core radius.
pub const RADIAL_EXTENT: f64 = 3.0;

/// Generalized Laguerre polynomial `L_n^alpha(x)` by three-term recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor grid in `(r, phi)` with `r dr dphi` folded into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    radius: f64,
    r: Vec<f64>,
    phi: Vec<f64>,
    weights: Vec<f64>,
}

impl FieldGrid {
    pub fn new(radius: f64, radial_nodes: usize, azimuth_nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || radial_nodes == 0 || azimuth_nodes == 0 {
            return Err(Error::InvalidSpec("quadrature grid must be non-empty".into()));
        }
        let (x, w) = gauss_legendre(radial_nodes);
        let r: Vec<f64> = x.iter().map(|x| 0.5 * radius * (x + 1.0)).collect();
        let rw: Vec<f64> = w.iter().zip(&r).map(|(w, r)| 0.5 * radius * w * r).collect();
        let dphi = 2.0 * PI / azimuth_nodes as f64;
        let phi: Vec<f64> = (0..azimuth_nodes).map(|j| j as f64 * dphi).collect();
        let weights = rw.iter().flat_map(|rw| std::iter::repeat_n(rw * dphi, azimuth_nodes)).collect();
        Ok(FieldGrid { radius, r, phi, weights })
    }

    /// The documented default for a fiber: `3a` extent, 160 x 64 nodes.
    pub fn for_fiber(fiber: &FiberSpec) -> Result<Self> {
        Self::new(RADIAL_EXTENT * fiber.a, DEFAULT_RADIAL_NODES, DEFAULT_AZIMUTH_NODES)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `(r, phi)` of every node in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().flat_map(move |&r| self.phi.iter().map(move |&p| (r, p)))
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// Scalar LP field `psi(r, phi)` [1/m], unit-normalized over the plane.
pub fn mode_field(mode: &LpMode, fiber: &FiberSpec, r: f64, phi: f64) -> Result<f64> {
    fiber.require_parabolic()?;
    let w_sq = fiber.spot_size_sq();
    let nu = mode.nu();
    let p = mode.mu() - 1;
    // w0^2 = w^2 / 2 is the Gaussian width parameter of the LG expansion
    let w0_sq = 0.5 * w_sq;
    let azimuthal_norm = if nu == 0 { 2.0 * PI } else { PI };
    let ln_norm_sq = (2.0f64).ln() + ln_factorial(p) - azimuthal_norm.ln() - w0_sq.ln() - ln_factorial(p + nu);
    let norm = (0.5 * ln_norm_sq).exp();
    let x = r * r / w0_sq;
    let radial = (r * (2.0 / w_sq).sqrt()).powi(nu as i32) * laguerre(p, f64::from(nu), x) * (-r * r / w_sq).exp();
    let angular = match mode.orientation() {
        Orientation::A => (f64::from(nu) * phi).cos(),
        Orientation::B => (f64::from(nu) * phi).sin(),
    };
    Ok(norm * radial * angular)
}

/// A field sampled on a [`FieldGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: FieldGrid,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn from_fn(grid: &FieldGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = grid.points().map(|(r, p)| f(r, p)).collect();
        SampledField { grid: grid.clone(), values }
    }

    pub fn mode(mode: &LpMode, fiber: &FiberSpec, grid: &FieldGrid) -> Result<Self> {
        fiber.require_parabolic()?;
        let values =
            grid.points().map(|(r, p)| mode_field(mode, fiber, r, p).map(Complex64::from)).collect::<Result<_>>()?;
        Ok(SampledField { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `integral f conj(g) dA` by quadrature.
pub fn overlap(f: &SampledField, g: &SampledField) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::DomainMismatch);
    }
    Ok(f.values.iter().zip(&g.values).zip(&f.grid.weights).map(|((a, b), w)| a * b.conj() * *w).sum())
}

/// Gram matrix `G[i][j] = overlap(psi_i, psi_j)` of every basis mode.
pub fn gram_matrix(basis: &ModeBasis, grid: &FieldGrid) -> Result<DMatrix<Complex64>> {
    let fields =
        basis.modes().iter().map(|m| SampledField::mode(m, basis.fiber(), grid)).collect::<Result<Vec<_>>>()?;
    let n = fields.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = overlap(&fields[i], &fields[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
    }
    Ok(gram)
}

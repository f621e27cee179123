//! Scalar reference for the stress update.
//!
//! Shares nothing with the production kernels beyond the quadrature rule:
//! basis values come from direct polynomial evaluation, Jacobians from the
//! vertex coordinates, and instead of forming `M^-1 B` the local system
//! `M c = B rhs` is solved by Gaussian elimination. All arithmetic runs in
//! double-double (~106 bit significand) and is rounded to `f64` at the end.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::basis::{gauss_rule, ngp_for_dofs};
use crate::error::{Error, Result};
use crate::fields::{DGField, Scalar, StorageLayout};
use crate::mesh::Mesh;

use super::update::check_mesh;
use super::{StressState, VPParams};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker's exact product.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub(crate) fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub(crate) fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub(crate) fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let q = self.hi.sqrt();
        let (p, e) = two_prod(q, q);
        let r = self - Dd { hi: p, lo: e };
        let (hi, lo) = quick_two_sum(q, r.hi / (2.0 * q));
        Dd { hi, lo }
    }

    /// `exp` to about one `f64` ulp, which is all the reference needs.
    pub(crate) fn exp(self) -> Dd {
        let e = self.hi.exp();
        Dd::new(e) * (Dd::ONE + Dd::new(self.lo))
    }

    pub(crate) fn max(self, other: Dd) -> Dd {
        if other > self {
            other
        } else {
            self
        }
    }

    pub(crate) fn min(self, other: Dd) -> Dd {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

fn monomial(j: usize, s: Dd, t: Dd) -> Dd {
    let half = Dd::new(0.5);
    let (x, y) = (s - half, t - half);
    match j {
        0 => Dd::ONE,
        1 => x,
        2 => y,
        3 => x * x,
        4 => y * y,
        5 => x * y,
        6 => x * x * y,
        7 => x * y * y,
        _ => unreachable!("basis index {j}"),
    }
}

/// Solves the dense system `m x = b` for several right-hand sides with
/// partial pivoting. `m` is row-major `n x n`; `b[r]` is right-hand side `r`.
fn gauss_solve(m: &mut [Dd], n: usize, b: &mut [Vec<Dd>]) -> Result<()> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                m[x * n + col]
                    .abs()
                    .partial_cmp(&m[y * n + col].abs())
                    .expect("finite entries")
            })
            .expect("non-empty range");
        if m[pivot * n + col].hi == 0.0 {
            return Err(Error::SingularMatrix {
                pivot: col,
                value: 0.0,
            });
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            for rhs in b.iter_mut() {
                rhs.swap(col, pivot);
            }
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] = m[row * n + k] - f * m[col * n + k];
            }
            for rhs in b.iter_mut() {
                rhs[row] = rhs[row] - f * rhs[col];
            }
        }
    }
    for rhs in b.iter_mut() {
        for row in (0..n).rev() {
            let mut v = rhs[row];
            for k in row + 1..n {
                v = v - m[row * n + k] * rhs[k];
            }
            rhs[row] = v / m[row * n + row];
        }
    }
    Ok(())
}

/// Output of [`stress_update_reference`]: fresh row-major `f64` fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceStress {
    pub s11: DGField<f64>,
    pub s12: DGField<f64>,
    pub s22: DGField<f64>,
}

impl ReferenceStress {
    pub fn fields(&self) -> [&DGField<f64>; 3] {
        [&self.s11, &self.s12, &self.s22]
    }
}

/// Computes one stress update of `state` without modifying it.
pub fn stress_update_reference<T: Scalar>(
    state: &StressState<T>,
    mesh: &Mesh,
    params: &VPParams,
) -> Result<ReferenceStress> {
    params.validate()?;
    let dims = state.validate()?;
    check_mesh(mesh, dims)?;
    let (n, n_a, n_s) = (dims.n_elements, dims.n_a, dims.n_s);
    let rule = gauss_rule(ngp_for_dofs(n_s)?)?;
    let ng = rule.n_points();

    let pstar = Dd::new(params.pstar);
    let dmin = Dd::new(params.delta_min);
    let c = Dd::new(params.c);
    let alpha = Dd::new(params.alpha);
    let alpha_inv = Dd::ONE / alpha;
    let fac = Dd::ONE - alpha_inv;

    // Basis values depend only on the reference point.
    let psi: Vec<Vec<Dd>> = (0..ng)
        .map(|g| {
            let (s, t) = rule.point(g);
            (0..8).map(|j| monomial(j, Dd::new(s), Dd::new(t))).collect()
        })
        .collect();

    let mut out = [
        DGField::zeros(n, n_s, StorageLayout::RowMajor)?,
        DGField::zeros(n, n_s, StorageLayout::RowMajor)?,
        DGField::zeros(n, n_s, StorageLayout::RowMajor)?,
    ];
    let stress_in = [&state.s11, &state.s12, &state.s22];
    let coef = |f: &DGField<T>, i: usize, j: usize| Dd::new(f.get(i, j).as_f64());
    let eval = |f: &DGField<T>, i: usize, g: usize, n_local: usize| {
        (0..n_local).fold(Dd::ZERO, |acc, j| acc + coef(f, i, j) * psi[g][j])
    };

    let mut mass = vec![Dd::ZERO; n_s * n_s];
    let mut rhs = vec![vec![Dd::ZERO; n_s]; 3];
    for i in 0..n {
        let [v0, v1, v2, v3] = mesh.quad(i).vertices.map(|[x, y]| [Dd::new(x), Dd::new(y)]);
        mass.fill(Dd::ZERO);
        for r in rhs.iter_mut() {
            r.fill(Dd::ZERO);
        }
        for g in 0..ng {
            let (s, t) = rule.point(g);
            let (s, t) = (Dd::new(s), Dd::new(t));
            let ds = [0, 1].map(|k| (Dd::ONE - t) * (v1[k] - v0[k]) + t * (v3[k] - v2[k]));
            let dt = [0, 1].map(|k| (Dd::ONE - s) * (v2[k] - v0[k]) + s * (v3[k] - v1[k]));
            let det = ds[0] * dt[1] - ds[1] * dt[0];
            if det.hi <= 0.0 {
                return Err(Error::DegenerateElement {
                    element: i,
                    det: det.to_f64(),
                    point: [s.hi, t.hi],
                });
            }
            let wdet = Dd::new(rule.weight(g)) * det;

            let h = eval(&state.h, i, g, n_a).max(Dd::ZERO);
            let a = eval(&state.a, i, g, n_a).max(Dd::ZERO).min(Dd::ONE);
            let e11 = eval(&state.e11, i, g, n_s);
            let e12 = eval(&state.e12, i, g, n_s);
            let e22 = eval(&state.e22, i, g, n_s);

            let p = pstar * h * (-(c * (Dd::ONE - a))).exp();
            let delta = (dmin * dmin
                + Dd::new(1.25) * (e11 * e11 + e22 * e22)
                + Dd::new(1.5) * e11 * e22
                + e12 * e12)
                .sqrt();
            let pd = p / delta;
            let half_p = Dd::new(0.5) * p;
            let (c58, c38) = (Dd::new(0.625), Dd::new(0.375));
            let vp = [
                pd * (c58 * e11 + c38 * e22) - half_p,
                pd * Dd::new(0.25) * e12,
                pd * (c58 * e22 + c38 * e11) - half_p,
            ];
            for j in 0..n_s {
                let wpj = wdet * psi[g][j];
                for k in 0..n_s {
                    mass[j * n_s + k] = mass[j * n_s + k] + wpj * psi[g][k];
                }
                for (r, v) in rhs.iter_mut().zip(vp) {
                    r[j] = r[j] + wpj * v;
                }
            }
        }
        gauss_solve(&mut mass, n_s, &mut rhs)?;
        for comp in 0..3 {
            for j in 0..n_s {
                let old = coef(stress_in[comp], i, j);
                let new = fac * old + alpha_inv * rhs[comp][j];
                out[comp].set(i, j, new.to_f64());
            }
        }
    }
    let [s11, s12, s22] = out;
    Ok(ReferenceStress { s11, s12, s22 })
}

/// Worst per-component relative max-norm deviation of `state`'s stresses
/// from the reference: `max_c |S_c - R_c|_inf / |R_c|_inf`. Components that
/// are identically zero in the reference contribute their absolute error.
pub fn relative_deviation<T: Scalar>(state: &StressState<T>, reference: &ReferenceStress) -> Result<f64> {
    let mut worst = 0.0f64;
    for (s, r) in state.stresses().into_iter().zip(reference.fields()) {
        let diff = s.cast::<f64>().max_abs_diff(r)?;
        let scale = r.max_abs();
        let rel = if scale > 0.0 { diff / scale } else { diff };
        if rel > worst || rel.is_nan() {
            worst = rel;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_arithmetic_carries_extra_bits() {
        let third = Dd::ONE / Dd::new(3.0);
        let back = third * Dd::new(3.0);
        assert!((back - Dd::ONE).to_f64().abs() < 1e-30);
        let tiny = Dd::new(1.0) + Dd::new(1e-20);
        assert_eq!(tiny.hi, 1.0);
        assert_eq!((tiny - Dd::ONE).to_f64(), 1e-20);
        let r2 = Dd::new(2.0).sqrt();
        assert!((r2 * r2 - Dd::new(2.0)).to_f64().abs() < 1e-30);
    }

    #[test]
    fn gauss_solve_pivots() {
        let mut m: Vec<Dd> = [0.0, 2.0, 1.0, 1.0].iter().map(|&x| Dd::new(x)).collect();
        let mut b = vec![vec![Dd::new(4.0), Dd::new(3.0)]];
        gauss_solve(&mut m, 2, &mut b).unwrap();
        assert!((b[0][0].to_f64() - 1.0).abs() < 1e-30);
        assert!((b[0][1].to_f64() - 2.0).abs() < 1e-30);
    }
}

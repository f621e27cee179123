//! Gauss rules, basis tables and L2 projection on the reference square.
//!
//! The local dG space uses centered monomials on `[0,1]^2` with
//! `S = s - 1/2`, `T = t - 1/2`:
//!
//! | n | functions                        |
//! |---|----------------------------------|
//! | 1 | 1                                |
//! | 3 | 1, S, T                          |
//! | 6 | 1, S, T, S^2, T^2, ST            |
//! | 8 | 1, S, T, S^2, T^2, ST, S^2T, ST^2 |
//!
//! Tensor Gauss points are ordered x-fastest: `g = gy * ngp + gx`.

use crate::error::{Error, Result};
use crate::fields::{DGField, StorageLayout};
use crate::linalg::{cholesky_in_place, cholesky_solve};
use crate::mesh::Mesh;

/// Local space sizes with a basis table.
pub const SUPPORTED_LOCAL_DOFS: [usize; 4] = [1, 3, 6, 8];
/// Points per direction with a Gauss rule.
pub const SUPPORTED_NGP: [usize; 3] = [1, 2, 3];

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    ngp: usize,
    points_1d: Vec<f64>,
    weights_1d: Vec<f64>,
}

impl QuadratureRule {
    pub fn ngp(&self) -> usize {
        self.ngp
    }

    /// Number of tensor points, `ngp^2`.
    pub fn n_points(&self) -> usize {
        self.ngp * self.ngp
    }

    pub fn points_1d(&self) -> &[f64] {
        &self.points_1d
    }

    pub fn weights_1d(&self) -> &[f64] {
        &self.weights_1d
    }

    /// Reference coordinates `(s, t)` of tensor point `g`.
    pub fn point(&self, g: usize) -> (f64, f64) {
        (self.points_1d[g % self.ngp], self.points_1d[g / self.ngp])
    }

    pub fn weight(&self, g: usize) -> f64 {
        self.weights_1d[g % self.ngp] * self.weights_1d[g / self.ngp]
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.n_points()).map(|g| self.point(g)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_points()).map(|g| self.weight(g)).collect()
    }
}

/// Gauss-Legendre rule with `ngp` points per direction, mapped to `[0, 1]`.
pub fn gauss_rule(ngp: usize) -> Result<QuadratureRule> {
    let (points_1d, weights_1d) = match ngp {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        3 => {
            let d = 0.5 * 0.6f64.sqrt();
            (
                vec![0.5 - d, 0.5, 0.5 + d],
                vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            )
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "{ngp}-point Gauss rule (supported: 1, 2, 3)"
            )))
        }
    };
    Ok(QuadratureRule {
        ngp,
        points_1d,
        weights_1d,
    })
}

/// Gauss points per direction used with a stress space of `n_s` local DOFs.
pub fn ngp_for_dofs(n_s: usize) -> Result<usize> {
    match n_s {
        3 => Ok(2),
        8 => Ok(3),
        _ => Err(Error::Unsupported(format!(
            "stress space with {n_s} local DOFs (supported: 3, 8)"
        ))),
    }
}

/// Value of centered monomial `j` at reference point `(s, t)`.
#[inline]
pub fn basis_value(j: usize, s: f64, t: f64) -> f64 {
    let (x, y) = (s - 0.5, t - 0.5);
    match j {
        0 => 1.0,
        1 => x,
        2 => y,
        3 => x * x,
        4 => y * y,
        5 => x * y,
        6 => x * x * y,
        7 => x * y * y,
        _ => panic!("no basis function {j}"),
    }
}

/// `n x n_G` table of basis values at the tensor Gauss points.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTable {
    n_local: usize,
    ngp: usize,
    values: Vec<f64>,
}

impl BasisTable {
    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn ngp(&self) -> usize {
        self.ngp
    }

    pub fn n_points(&self) -> usize {
        self.ngp * self.ngp
    }

    #[inline]
    pub fn get(&self, j: usize, g: usize) -> f64 {
        self.values[j * self.n_points() + g]
    }

    /// Row-major `n x n_G` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let ng = self.n_points();
        &self.values[j * ng..(j + 1) * ng]
    }

    pub fn size_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }
}

pub fn psi_table(n_local: usize, ngp: usize) -> Result<BasisTable> {
    if !SUPPORTED_LOCAL_DOFS.contains(&n_local) {
        return Err(Error::Unsupported(format!(
            "basis with {n_local} local DOFs (supported: 1, 3, 6, 8)"
        )));
    }
    let rule = gauss_rule(ngp)?;
    let ng = rule.n_points();
    let mut values = Vec::with_capacity(n_local * ng);
    for j in 0..n_local {
        for g in 0..ng {
            let (s, t) = rule.point(g);
            values.push(basis_value(j, s, t));
        }
    }
    Ok(BasisTable {
        n_local,
        ngp,
        values,
    })
}

/// Total size of every supported basis table at 8 bytes per entry.
pub fn all_psi_tables_bytes() -> usize {
    SUPPORTED_LOCAL_DOFS
        .iter()
        .flat_map(|&n| SUPPORTED_NGP.iter().map(move |&ngp| (n, ngp)))
        .map(|(n, ngp)| psi_table(n, ngp).expect("supported pair").size_bytes())
        .sum()
}

/// Values at the Gauss points of the local expansion `row`.
pub fn evaluate_at_gauss(row: &[f64], table: &BasisTable) -> Result<Vec<f64>> {
    if row.len() != table.n_local {
        return Err(Error::DimensionMismatch(format!(
            "row of length {} for a table with {} functions",
            row.len(),
            table.n_local
        )));
    }
    let ng = table.n_points();
    let mut out = vec![0.0; ng];
    for (j, &c) in row.iter().enumerate() {
        for (o, &psi) in out.iter_mut().zip(table.row(j)) {
            *o += c * psi;
        }
    }
    Ok(out)
}

/// Elementwise L2 projection of `f(x, y)` onto the space of `table`,
/// integrated with `rule`. Returns a row-major field.
pub fn project_function<F>(
    mesh: &Mesh,
    table: &BasisTable,
    rule: &QuadratureRule,
    f: F,
) -> Result<DGField<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    if table.ngp != rule.ngp {
        return Err(Error::DimensionMismatch(format!(
            "basis table sampled at {} points per direction, rule has {}",
            table.ngp, rule.ngp
        )));
    }
    let n = table.n_local;
    let ng = rule.n_points();
    let weights = rule.weights();
    let points = rule.points();
    let mut field = DGField::zeros(mesh.n_elements(), n, StorageLayout::RowMajor)?;
    let mut mass = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut row = vec![0.0; n];
    for i in 0..mesh.n_elements() {
        let quad = mesh.quad(i);
        mass.fill(0.0);
        rhs.fill(0.0);
        for g in 0..ng {
            let (s, t) = points[g];
            let det = quad.jacobian_det(s, t);
            if !(det > 0.0) {
                return Err(Error::DegenerateElement {
                    element: i,
                    det,
                    point: [s, t],
                });
            }
            let x = quad.map(s, t);
            let wj = weights[g] * det;
            let fx = f(x[0], x[1]);
            for j in 0..n {
                let pj = table.get(j, g);
                rhs[j] += wj * fx * pj;
                for k in 0..=j {
                    mass[j * n + k] += wj * pj * table.get(k, g);
                }
            }
        }
        cholesky_in_place(&mut mass, n)?;
        row.copy_from_slice(&rhs);
        cholesky_solve(&mass, n, &mut row, 1);
        field.set_element_row(i, &row)?;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_1d(rule: &QuadratureRule, p: i32) -> f64 {
        rule.points_1d()
            .iter()
            .zip(rule.weights_1d())
            .map(|(&x, &w)| w * x.powi(p))
            .sum()
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.points_1d(), &[0.5]);
        assert_eq!(r.weights_1d(), &[1.0]);
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_rule(2).unwrap();
        let d = 1.0 / (2.0 * 3f64.sqrt());
        assert!((r.points_1d()[0] - (0.5 - d)).abs() < 1e-16);
        assert!((r.points_1d()[1] - (0.5 + d)).abs() < 1e-16);
        assert_eq!(r.weights_1d(), &[0.5, 0.5]);
    }

    #[test]
    fn monomial_exactness() {
        for ngp in 1..=3 {
            let r = gauss_rule(ngp).unwrap();
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for p in 0..=(2 * ngp as i32 - 1) {
                let exact = 1.0 / (p as f64 + 1.0);
                assert!(
                    (integrate_1d(&r, p) - exact).abs() < 1e-14,
                    "ngp={ngp} degree {p}"
                );
            }
        }
        assert!(gauss_rule(4).is_err());
        assert!(gauss_rule(0).is_err());
    }

    #[test]
    fn ngp_selection() {
        assert_eq!(ngp_for_dofs(8).unwrap(), 3);
        assert_eq!(ngp_for_dofs(3).unwrap(), 2);
        assert!(matches!(ngp_for_dofs(5), Err(Error::Unsupported(_))));
        assert!(ngp_for_dofs(6).is_err());
    }

    #[test]
    fn constant_table() {
        let t = psi_table(1, 1).unwrap();
        assert_eq!(t.values(), &[1.0]);
        for &n in &SUPPORTED_LOCAL_DOFS {
            for &ngp in &SUPPORTED_NGP {
                let t = psi_table(n, ngp).unwrap();
                assert!(t.row(0).iter().all(|&v| v == 1.0));
                assert_eq!(t.values().len(), n * ngp * ngp);
            }
        }
        assert!(psi_table(2, 2).is_err());
        assert!(psi_table(3, 4).is_err());
    }

    #[test]
    fn linear_table_values() {
        let t = psi_table(3, 2).unwrap();
        let d = 1.0 / (2.0 * 3f64.sqrt());
        // x-fastest ordering: (-,-), (+,-), (-,+), (+,+)
        let sx = [-d, d, -d, d];
        let sy = [-d, -d, d, d];
        for g in 0..4 {
            assert!((t.get(1, g) - sx[g]).abs() < 1e-16);
            assert!((t.get(2, g) - sy[g]).abs() < 1e-16);
        }
    }

    #[test]
    fn quadratic_table_matches_direct_evaluation() {
        let t = psi_table(8, 3).unwrap();
        assert_eq!((t.n_local(), t.n_points()), (8, 9));
        let q = 0.5 * 0.6f64.sqrt();
        let pts = [-q, 0.0, q];
        for g in 0..9 {
            let (x, y) = (pts[g % 3], pts[g / 3]);
            let direct = [1.0, x, y, x * x, y * y, x * y, x * x * y, x * y * y];
            for j in 0..8 {
                assert!((t.get(j, g) - direct[j]).abs() < 1e-16, "j={j} g={g}");
            }
        }
    }

    #[test]
    fn table_budget() {
        assert!(all_psi_tables_bytes() <= 65536);
    }

    #[test]
    fn evaluate_examples() {
        let t1 = psi_table(1, 3).unwrap();
        assert_eq!(evaluate_at_gauss(&[4.5], &t1).unwrap(), vec![4.5; 9]);
        let t8 = psi_table(8, 3).unwrap();
        let mut unit = vec![0.0; 8];
        unit[0] = 1.0;
        assert_eq!(evaluate_at_gauss(&unit, &t8).unwrap(), vec![1.0; 9]);
        assert!(evaluate_at_gauss(&[1.0, 2.0], &t8).is_err());

        let t3 = psi_table(3, 2).unwrap();
        let rule = gauss_rule(2).unwrap();
        let row = [0.37, -1.2, 2.9];
        let vals = evaluate_at_gauss(&row, &t3).unwrap();
        for g in 0..4 {
            let (s, t) = rule.point(g);
            let direct = row[0] + row[1] * (s - 0.5) + row[2] * (t - 0.5);
            assert!((vals[g] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn project_constant_and_linear() {
        let mesh = Mesh::structured(3, 2, 3.0, 2.0, 0.2).unwrap();
        let rule = gauss_rule(2).unwrap();
        let t3 = psi_table(3, 2).unwrap();
        let ones = project_function(&mesh, &t3, &rule, |_, _| 1.0).unwrap();
        for i in 0..mesh.n_elements() {
            let row = ones.element_row(i).unwrap();
            assert!((row[0] - 1.0).abs() < 1e-14);
            assert!(row[1].abs() < 1e-14 && row[2].abs() < 1e-14);
        }

        let unit = Mesh::structured(1, 1, 1.0, 1.0, 0.0).unwrap();
        let x = project_function(&unit, &t3, &rule, |x, _| x).unwrap();
        let row = x.element_row(0).unwrap();
        assert!((row[0] - 0.5).abs() < 1e-15);
        assert!((row[1] - 1.0).abs() < 1e-15);
        assert!(row[2].abs() < 1e-15);
    }

    #[test]
    fn projection_rejects_mismatch_and_singular_mass() {
        let mesh = Mesh::structured(2, 2, 1.0, 1.0, 0.0).unwrap();
        let rule2 = gauss_rule(2).unwrap();
        let t3_3 = psi_table(3, 3).unwrap();
        assert!(matches!(
            project_function(&mesh, &t3_3, &rule2, |_, _| 1.0),
            Err(Error::DimensionMismatch(_))
        ));
        // six functions cannot be separated by four points
        let t6_2 = psi_table(6, 2).unwrap();
        assert!(matches!(
            project_function(&mesh, &t6_2, &rule2, |_, _| 1.0),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn quadratic_projection_reproduces_function() {
        let mesh = Mesh::structured(4, 3, 8.0e3, 6.0e3, 0.0).unwrap();
        let rule = gauss_rule(3).unwrap();
        let t8 = psi_table(8, 3).unwrap();
        let f = |x: f64, y: f64| {
            let (u, v) = (x / 1e3, y / 1e3);
            1.5 - 0.3 * u + 0.7 * v + 0.05 * u * u - 0.02 * v * v + 0.11 * u * v
        };
        let field = project_function(&mesh, &t8, &rule, f).unwrap();
        for i in 0..mesh.n_elements() {
            let vals = evaluate_at_gauss(&field.element_row(i).unwrap(), &t8).unwrap();
            let quad = mesh.quad(i);
            for g in 0..9 {
                let (s, t) = rule.point(g);
                let x = quad.map(s, t);
                assert!((vals[g] - f(x[0], x[1])).abs() < 1e-12);
            }
        }
    }
}

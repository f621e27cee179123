use crate::basis::{ngp_for_dofs, BasisTable, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::Scalar;
use crate::linalg::{cholesky_in_place, cholesky_solve};
use crate::mesh::{ElementQuad, Mesh};

const MAX_NS: usize = 8;
const MAX_NG: usize = 9;

/// Geometry-independent data for assembling one element's inverse map.
#[derive(Clone, Debug)]
pub struct LocalAssembly {
    n_s: usize,
    n_g: usize,
    psi: Vec<f64>,
    points: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl LocalAssembly {
    pub fn new(n_s: usize, rule: &QuadratureRule, table_s: &BasisTable) -> Result<Self> {
        let ngp = ngp_for_dofs(n_s)?;
        if table_s.n_local() != n_s || table_s.ngp() != rule.ngp() || rule.ngp() != ngp {
            return Err(Error::DimensionMismatch(format!(
                "n_S = {n_s} needs a {ngp}-point rule and matching table; got rule {} and table {}x{}",
                rule.ngp(),
                table_s.n_local(),
                table_s.ngp()
            )));
        }
        Ok(LocalAssembly {
            n_s,
            n_g: rule.n_points(),
            psi: table_s.values().to_vec(),
            points: rule.points(),
            weights: rule.weights(),
        })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// Writes the row-major `n_S x n_G` matrix `M^-1 B` of `quad` to `out`,
    /// with `M_jk = sum_g w_g |J_g| psi_j psi_k` and `B_jg = w_g |J_g| psi_j`.
    /// `element` only labels the error.
    #[inline]
    pub fn element_map_into(&self, quad: &ElementQuad, element: usize, out: &mut [f64]) -> Result<()> {
        let (n, ng) = (self.n_s, self.n_g);
        let mut wdet = [0.0f64; MAX_NG];
        for g in 0..ng {
            let (s, t) = self.points[g];
            let det = quad.jacobian_det(s, t);
            if !(det > 0.0) {
                return Err(Error::DegenerateElement {
                    element,
                    det,
                    point: [s, t],
                });
            }
            wdet[g] = self.weights[g] * det;
        }
        let mut mass = [0.0f64; MAX_NS * MAX_NS];
        for j in 0..n {
            for k in 0..=j {
                let mut m = 0.0;
                for g in 0..ng {
                    m += wdet[g] * self.psi[j * ng + g] * self.psi[k * ng + g];
                }
                mass[j * n + k] = m;
            }
        }
        cholesky_in_place(&mut mass[..n * n], n)?;
        let out = &mut out[..n * ng];
        for j in 0..n {
            for g in 0..ng {
                out[j * ng + g] = wdet[g] * self.psi[j * ng + g];
            }
        }
        cholesky_solve(&mass[..n * n], n, out, ng);
        Ok(())
    }
}

/// One `n_S x n_G` inverse map per element, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseMapTable<T> {
    n_elements: usize,
    n_s: usize,
    n_g: usize,
    data: Vec<T>,
}

impl<T: Scalar> InverseMapTable<T> {
    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// Row-major matrix of element `i`.
    #[inline]
    pub fn matrix(&self, i: usize) -> &[T] {
        let len = self.n_s * self.n_g;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn cast<U: Scalar>(&self) -> InverseMapTable<U> {
        InverseMapTable {
            n_elements: self.n_elements,
            n_s: self.n_s,
            n_g: self.n_g,
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }
}

/// Assembles every element's inverse map in `f64` and rounds to `T`.
pub fn precompute_inverse_maps<T: Scalar>(
    mesh: &Mesh,
    n_s: usize,
    rule: &QuadratureRule,
    table_s: &BasisTable,
) -> Result<InverseMapTable<T>> {
    let asm = LocalAssembly::new(n_s, rule, table_s)?;
    let n = mesh.n_elements();
    let len = n_s * asm.n_g;
    let total = n * len;
    let mut data = Vec::new();
    data.try_reserve_exact(total)
        .map_err(|_| Error::Allocation(total))?;
    let mut local = [0.0f64; MAX_NS * MAX_NG];
    for i in 0..n {
        asm.element_map_into(&mesh.quad(i), i, &mut local)?;
        data.extend(local[..len].iter().map(|&x| T::lit(x)));
    }
    Ok(InverseMapTable {
        n_elements: n,
        n_s,
        n_g: asm.n_g,
        data,
    })
}

/// Inverse map of a single element, row-major `n_S x n_G`.
pub fn element_inverse_map(
    quad: &ElementQuad,
    n_s: usize,
    rule: &QuadratureRule,
    table_s: &BasisTable,
) -> Result<Vec<f64>> {
    let asm = LocalAssembly::new(n_s, rule, table_s)?;
    let mut out = vec![0.0; n_s * asm.n_g];
    asm.element_map_into(quad, 0, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gauss_rule, psi_table};

    fn setup(n_s: usize) -> (QuadratureRule, BasisTable) {
        let ngp = ngp_for_dofs(n_s).unwrap();
        (gauss_rule(ngp).unwrap(), psi_table(n_s, ngp).unwrap())
    }

    fn unit() -> ElementQuad {
        ElementQuad::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0])
    }

    #[test]
    fn unit_square_linear_map() {
        // M = diag(1, 1/12, 1/12) for {1, S, T}; column g is M^-1 psi(x_g) w_g.
        let (rule, table) = setup(3);
        let m = element_inverse_map(&unit(), 3, &rule, &table).unwrap();
        let diag_inv = [1.0, 12.0, 12.0];
        for j in 0..3 {
            for g in 0..4 {
                let expect = diag_inv[j] * table.get(j, g) * rule.weight(g);
                assert!((m[j * 4 + g] - expect).abs() < 1e-14, "j={j} g={g}");
            }
        }
    }

    #[test]
    fn scale_invariance() {
        for n_s in [3, 8] {
            let (rule, table) = setup(n_s);
            let base = element_inverse_map(&unit(), n_s, &rule, &table).unwrap();
            let rect = ElementQuad::new([1.0, 1.0], [3.0, 1.0], [1.0, 4.0], [3.0, 4.0]);
            let r = element_inverse_map(&rect, n_s, &rule, &table).unwrap();
            for (a, b) in base.iter().zip(&r) {
                assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
            }
            let q = ElementQuad::new([0.0, 0.0], [1.1, 0.2], [-0.1, 0.9], [1.3, 1.4]);
            let scaled = ElementQuad {
                vertices: q.vertices.map(|[x, y]| [4e3 * x, 4e3 * y]),
            };
            let a = element_inverse_map(&q, n_s, &rule, &table).unwrap();
            let b = element_inverse_map(&scaled, n_s, &rule, &table).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn precompute_matches_single_element() {
        let mesh = Mesh::structured(4, 3, 4e5, 3e5, 0.25).unwrap();
        for n_s in [3, 8] {
            let (rule, table) = setup(n_s);
            let all = precompute_inverse_maps::<f64>(&mesh, n_s, &rule, &table).unwrap();
            assert_eq!(all.n_elements(), 12);
            for i in 0..mesh.n_elements() {
                let one = element_inverse_map(&mesh.quad(i), n_s, &rule, &table).unwrap();
                assert_eq!(all.matrix(i), one.as_slice());
            }
        }
    }

    #[test]
    fn map_reproduces_projection_of_constants() {
        // M^-1 B applied to a constant at the Gauss points gives (c, 0, ..., 0).
        let mesh = Mesh::structured(3, 3, 3.0, 3.0, 0.28).unwrap();
        for n_s in [3, 8] {
            let (rule, table) = setup(n_s);
            let maps = precompute_inverse_maps::<f64>(&mesh, n_s, &rule, &table).unwrap();
            for i in 0..mesh.n_elements() {
                let m = maps.matrix(i);
                let ng = rule.n_points();
                for j in 0..n_s {
                    let v: f64 = (0..ng).map(|g| m[j * ng + g] * 2.5).sum();
                    let expect = if j == 0 { 2.5 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "element {i} j={j}: {v}");
                }
            }
        }
    }

    #[test]
    fn degenerate_and_mismatched_inputs() {
        let (rule, table) = setup(3);
        let flipped = ElementQuad::new([1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]);
        assert!(matches!(
            element_inverse_map(&flipped, 3, &rule, &table),
            Err(Error::DegenerateElement { .. })
        ));
        let (rule8, table8) = setup(8);
        assert!(element_inverse_map(&unit(), 3, &rule8, &table8).is_err());
        assert!(element_inverse_map(&unit(), 6, &rule8, &table8).is_err());
    }
}

//! The free Carnot group of step `N` over `R^d` in exponential coordinates of
//! the first kind.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::freelie::{FreeLieAlgebra, LieSeries};
use crate::tensoralg::PiecewiseLinearPath;

/// A point `exp(sum_k g_k P_k)` with `P_k` running over the Lyndon basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CarnotPoint {
    coords: LieSeries,
}

impl CarnotPoint {
    pub fn coords(&self) -> &LieSeries {
        &self.coords
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coords.coeffs()
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    pub fn step(&self) -> usize {
        self.coords.depth()
    }

    pub fn into_coords(self) -> LieSeries {
        self.coords
    }
}

#[derive(Debug, Clone)]
pub struct CarnotGroup {
    alg: FreeLieAlgebra,
}

impl CarnotGroup {
    pub fn new(d: usize, step: usize) -> Result<Self> {
        Ok(CarnotGroup { alg: FreeLieAlgebra::new(d, step)? })
    }

    pub fn from_algebra(alg: FreeLieAlgebra) -> Self {
        CarnotGroup { alg }
    }

    pub fn algebra(&self) -> &FreeLieAlgebra {
        &self.alg
    }

    pub fn dimension(&self) -> usize {
        self.alg.dimension()
    }

    pub fn identity(&self) -> CarnotPoint {
        CarnotPoint { coords: self.alg.zero() }
    }

    pub fn point(&self, coeffs: Vec<f64>) -> Result<CarnotPoint> {
        Ok(CarnotPoint { coords: self.alg.from_coeffs(coeffs)? })
    }

    pub fn from_series(&self, coords: LieSeries) -> Result<CarnotPoint> {
        self.check(&coords)?;
        Ok(CarnotPoint { coords })
    }

    fn check(&self, s: &LieSeries) -> Result<()> {
        if s.dim() != self.alg.alphabet_size() || s.depth() != self.alg.depth() {
            return Err(Error::DimensionMismatch(format!(
                "point of G_{}(R^{}) used in G_{}(R^{})",
                s.depth(),
                s.dim(),
                self.alg.depth(),
                self.alg.alphabet_size()
            )));
        }
        Ok(())
    }

    pub fn group_mul(&self, g: &CarnotPoint, h: &CarnotPoint) -> Result<CarnotPoint> {
        Ok(CarnotPoint { coords: self.alg.bch(&g.coords, &h.coords)? })
    }

    pub fn inverse(&self, g: &CarnotPoint) -> CarnotPoint {
        CarnotPoint { coords: g.coords.neg() }
    }

    /// `delta_lambda`: level-`j` coordinates scale by `lambda^j`.
    pub fn dilation(&self, g: &CarnotPoint, lambda: f64) -> CarnotPoint {
        let mut coords = g.coords.clone();
        for (c, e) in coords.coeffs_mut().iter_mut().zip(self.alg.basis()) {
            *c *= libm::pow(lambda, e.level as f64);
        }
        CarnotPoint { coords }
    }

    /// `D_i(g) = d/ds (g * exp(s e_i))` at `s = 0`, as a coordinate vector.
    pub fn left_invariant_field(&self, i: usize, g: &CarnotPoint) -> Result<Vec<f64>> {
        if i == 0 || i > self.alg.alphabet_size() {
            return Err(Error::InvalidArgument(format!("generator index {i} out of range")));
        }
        let v = self.alg.bch_linear_in_second(&g.coords, &self.alg.generator(i))?;
        Ok(v.coeffs().to_vec())
    }

    /// Lift at every knot: `project(log S(path|[t_0, t_k]))`.
    pub fn lift_path(&self, path: &PiecewiseLinearPath) -> Result<Vec<CarnotPoint>> {
        if path.dim() != self.alg.alphabet_size() {
            return Err(Error::DimensionMismatch(format!(
                "path in R^{} lifted to a group over {} generators",
                path.dim(),
                self.alg.alphabet_size()
            )));
        }
        path.prefix_signatures(self.alg.depth())
            .iter()
            .map(|s| Ok(CarnotPoint { coords: self.alg.project(&s.log()?)? }))
            .collect()
    }

    /// Lift at the final knot only.
    pub fn lift_endpoint(&self, path: &PiecewiseLinearPath) -> Result<CarnotPoint> {
        Ok(CarnotPoint { coords: crate::tensoralg::log_signature(&self.alg, path)? })
    }
}

/// Upper-triangular unipotent matrix `[[1, x, z], [0, 1, y], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergMatrix {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HeisenbergMatrix {
    pub const IDENTITY: HeisenbergMatrix = HeisenbergMatrix { x: 0.0, y: 0.0, z: 0.0 };

    pub fn to_array(&self) -> [[f64; 3]; 3] {
        [[1.0, self.x, self.z], [0.0, 1.0, self.y], [0.0, 0.0, 1.0]]
    }

    /// Reads a matrix back; fails unless it is upper unipotent.
    pub fn from_array(m: &[[f64; 3]; 3]) -> Result<Self> {
        let unipotent = m[0][0] == 1.0
            && m[1][1] == 1.0
            && m[2][2] == 1.0
            && m[1][0] == 0.0
            && m[2][0] == 0.0
            && m[2][1] == 0.0;
        if !unipotent {
            return Err(Error::InvalidArgument("matrix is not upper unipotent".into()));
        }
        Ok(HeisenbergMatrix { x: m[0][1], y: m[1][2], z: m[0][2] })
    }

    pub fn mul(&self, other: &HeisenbergMatrix) -> HeisenbergMatrix {
        HeisenbergMatrix {
            x: self.x + other.x,
            y: self.y + other.y,
            z: self.z + other.z + self.x * other.y,
        }
    }

    /// Exponential coordinates `(g_1, g_2, g_3)` over the basis `1, 2, [1,2]`.
    pub fn log_coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z - 0.5 * self.x * self.y]
    }
}

/// Matrix exponential of `g_1 E_12 + g_2 E_23 + g_3 E_13`, the image of a
/// point of `G_2(R^2)`.
pub fn heisenberg_roundtrip(g: &CarnotPoint) -> Result<HeisenbergMatrix> {
    if g.dim() != 2 || g.step() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Heisenberg representation needs d = 2, N = 2, got d = {}, N = {}",
            g.dim(),
            g.step()
        )));
    }
    let c = g.coeffs();
    Ok(HeisenbergMatrix { x: c[0], y: c[1], z: c[2] + 0.5 * c[0] * c[1] })
}

pub fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn random_point(group: &CarnotGroup, rng: &mut ChaCha8Rng) -> CarnotPoint {
        let c = (0..group.dimension()).map(|_| uniform(rng)).collect();
        group.point(c).unwrap()
    }

    fn random_path(rng: &mut ChaCha8Rng, d: usize, knots: usize) -> PiecewiseLinearPath {
        let v = (0..d * knots).map(|_| uniform(rng)).collect();
        PiecewiseLinearPath::uniform(d, 1.0, v).unwrap()
    }

    #[test]
    fn identity_and_inverse() {
        let g3 = CarnotGroup::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let g = random_point(&g3, &mut rng);
            assert_eq!(g3.group_mul(&g, &g3.identity()).unwrap(), g);
            assert_eq!(g3.group_mul(&g3.identity(), &g).unwrap(), g);
            let e = g3.group_mul(&g, &g3.inverse(&g)).unwrap();
            assert!(e.coords().max_abs() <= 1e-12);
        }
        assert_eq!(g3.inverse(&g3.identity()), g3.identity());
    }

    #[test]
    fn step_two_product() {
        let g2 = CarnotGroup::new(2, 2).unwrap();
        let g = g2.point(vec![0.3, -1.2, 0.7]).unwrap();
        let h = g2.point(vec![2.0, 0.5, -0.1]).unwrap();
        let p = g2.group_mul(&g, &h).unwrap();
        let expect = 0.7 - 0.1 + 0.5 * (0.3 * 0.5 - (-1.2) * 2.0);
        assert!((p.coeffs()[2] - expect).abs() < 1e-15);
    }

    #[test]
    fn dilation_is_a_homomorphism() {
        let g = CarnotGroup::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_point(&g, &mut rng);
        assert_eq!(g.dilation(&a, 1.0), a);
        assert!(g.dilation(&a, 0.0).coords().max_abs() == 0.0);
        for _ in 0..20 {
            let a = random_point(&g, &mut rng);
            let b = random_point(&g, &mut rng);
            let lam = 1.5 * uniform(&mut rng);
            let lhs = g.dilation(&g.group_mul(&a, &b).unwrap(), lam);
            let rhs = g.group_mul(&g.dilation(&a, lam), &g.dilation(&b, lam)).unwrap();
            assert!(lhs.coords().max_abs_diff(rhs.coords()) <= 1e-12);
        }
    }

    #[test]
    fn fields_at_identity_are_coordinate_vectors() {
        let g = CarnotGroup::new(3, 3).unwrap();
        for i in 1..=3 {
            let v = g.left_invariant_field(i, &g.identity()).unwrap();
            for (k, x) in v.iter().enumerate() {
                assert_eq!(*x, if k == i - 1 { 1.0 } else { 0.0 });
            }
        }
        assert!(g.left_invariant_field(0, &g.identity()).is_err());
        assert!(g.left_invariant_field(4, &g.identity()).is_err());
    }

    #[test]
    fn step_two_fields() {
        let g2 = CarnotGroup::new(2, 2).unwrap();
        let p = g2.point(vec![0.4, -0.9, 3.0]).unwrap();
        assert_eq!(g2.left_invariant_field(1, &p).unwrap(), vec![1.0, 0.0, 0.45]);
        assert_eq!(g2.left_invariant_field(2, &p).unwrap(), vec![0.0, 1.0, 0.2]);
    }

    #[test]
    fn left_invariance() {
        for (d, n) in [(2, 3), (3, 3), (2, 4)] {
            let grp = CarnotGroup::new(d, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..5 {
                let g = random_point(&grp, &mut rng);
                let h = random_point(&grp, &mut rng);
                let gh = grp.group_mul(&g, &h).unwrap();
                for i in 1..=d {
                    let dh = grp.left_invariant_field(i, &h).unwrap();
                    let want = grp.left_invariant_field(i, &gh).unwrap();
                    let step = 1e-6;
                    let shifted = |s: f64| {
                        let c = h.coeffs().iter().zip(&dh).map(|(a, b)| a + s * b).collect();
                        grp.group_mul(&g, &grp.point(c).unwrap()).unwrap()
                    };
                    let (p, m) = (shifted(step), shifted(-step));
                    for k in 0..grp.dimension() {
                        let fd = (p.coeffs()[k] - m.coeffs()[k]) / (2.0 * step);
                        assert!((fd - want[k]).abs() < 1e-6, "d={d} N={n} i={i} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn lift_basics() {
        let g = CarnotGroup::new(2, 3).unwrap();
        let flat = PiecewiseLinearPath::uniform(2, 1.0, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap();
        for p in g.lift_path(&flat).unwrap() {
            assert_eq!(p.coords().max_abs(), 0.0);
        }
        let seg = PiecewiseLinearPath::from_points(&[&[0.0, 0.0], &[2.0, -1.0]]).unwrap();
        let lift = g.lift_path(&seg).unwrap();
        assert_eq!(lift.len(), 2);
        let c = lift[1].coeffs();
        assert!((c[0] - 2.0).abs() < 1e-15 && (c[1] + 1.0).abs() < 1e-15);
        assert!(c[2..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn square_loop_lift() {
        let g = CarnotGroup::new(2, 2).unwrap();
        let sq = PiecewiseLinearPath::from_points(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[1.0, 1.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
        ])
        .unwrap();
        let end = g.lift_endpoint(&sq).unwrap();
        let c = end.coeffs();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
        assert!((c[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_is_a_morphism() {
        let g = CarnotGroup::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_path(&mut rng, 3, 4);
            let b = random_path(&mut rng, 3, 3);
            let ab = a.concat(&b).unwrap();
            let prod = g.group_mul(&g.lift_endpoint(&a).unwrap(), &g.lift_endpoint(&b).unwrap()).unwrap();
            assert!(g.lift_endpoint(&ab).unwrap().coords().max_abs_diff(prod.coords()) < 1e-10);
        }
    }

    #[test]
    fn lift_commutes_with_dilation() {
        let g = CarnotGroup::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_path(&mut rng, 2, 6);
        for lam in [0.5, -1.3, 2.0] {
            let lhs = g.lift_path(&p.scaled(lam)).unwrap();
            let rhs = g.lift_path(&p).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!(a.coords().max_abs_diff(g.dilation(b, lam).coords()) < 1e-10);
            }
        }
    }

    #[test]
    fn heisenberg_representation() {
        let g = CarnotGroup::new(2, 2).unwrap();
        assert_eq!(heisenberg_roundtrip(&g.identity()).unwrap(), HeisenbergMatrix::IDENTITY);
        let z = heisenberg_roundtrip(&g.point(vec![0.0, 0.0, 1.5]).unwrap()).unwrap();
        assert_eq!(z, HeisenbergMatrix { x: 0.0, y: 0.0, z: 1.5 });
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a = random_point(&g, &mut rng);
            let b = random_point(&g, &mut rng);
            let ma = heisenberg_roundtrip(&a).unwrap();
            let mb = heisenberg_roundtrip(&b).unwrap();
            let via_group = heisenberg_roundtrip(&g.group_mul(&a, &b).unwrap()).unwrap();
            let via_matrix = HeisenbergMatrix::from_array(&matmul3(&ma.to_array(), &mb.to_array())).unwrap();
            let m = ma.mul(&mb);
            assert!((m.z - via_matrix.z).abs() <= 1e-15 && m.x == via_matrix.x && m.y == via_matrix.y);
            let r = (via_group.x - via_matrix.x)
                .abs()
                .max((via_group.y - via_matrix.y).abs())
                .max((via_group.z - via_matrix.z).abs());
            assert!(r <= 1e-12);
            let back = ma.log_coords();
            for k in 0..3 {
                assert!((back[k] - a.coeffs()[k]).abs() <= 1e-15);
            }
        }
        assert!(heisenberg_roundtrip(&CarnotGroup::new(2, 3).unwrap().identity()).is_err());
    }
}

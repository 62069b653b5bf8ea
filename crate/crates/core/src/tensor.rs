//! Dense second- and fourth-order tensors in three dimensions.
//!
//! Everything is carried in 3-D even for plane problems; the out-of-plane
//! row and column of a plane-strain deformation gradient hold the identity.
//! Components are stored in an orthonormal Cartesian basis, `Tensor2` as a
//! row-major 3x3 array and `Tensor4` as a flat array of 81 entries indexed
//! `ijkl -> 27 i + 9 j + 3 k + l`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::Error;

/// Determinants at or below this magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector3(pub [f64; 3]);

impl Vector3 {
    pub const ZERO: Vector3 = Vector3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vector3([x, y, z])
    }

    /// Unit vector along axis `i`.
    pub fn unit(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Vector3(v)
    }

    pub fn dot(&self, other: &Vector3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for Vector3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vector3 {
    type Output = Vector3;
    fn add(self, rhs: Vector3) -> Vector3 {
        Vector3(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Vector3 {
    type Output = Vector3;
    fn sub(self, rhs: Vector3) -> Vector3 {
        Vector3(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl AddAssign for Vector3 {
    fn add_assign(&mut self, rhs: Vector3) {
        for i in 0..3 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl SubAssign for Vector3 {
    fn sub_assign(&mut self, rhs: Vector3) {
        for i in 0..3 {
            self.0[i] -= rhs.0[i];
        }
    }
}

impl Neg for Vector3 {
    type Output = Vector3;
    fn neg(self) -> Vector3 {
        Vector3(self.0.map(|v| -v))
    }
}

impl Mul<f64> for Vector3 {
    type Output = Vector3;
    fn mul(self, s: f64) -> Vector3 {
        Vector3(self.0.map(|v| v * s))
    }
}

impl Mul<Vector3> for f64 {
    type Output = Vector3;
    fn mul(self, v: Vector3) -> Vector3 {
        v * self
    }
}

/// Second-order tensor, `c[i][j]` is the `e_i ⊗ e_j` component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor2 {
    pub c: [[f64; 3]; 3],
}

impl Tensor2 {
    pub const ZERO: Tensor2 = Tensor2 { c: [[0.0; 3]; 3] };

    pub const IDENTITY: Tensor2 = Tensor2 {
        c: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(c: [[f64; 3]; 3]) -> Self {
        Tensor2 { c }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Tensor2::from_rows([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// `u ⊗ v`, with components `u_i v_j`.
    pub fn outer(u: &Vector3, v: &Vector3) -> Self {
        Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| u[i] * v[j])),
        }
    }

    pub fn transpose(&self) -> Self {
        Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| self.c[j][i])),
        }
    }

    pub fn trace(&self) -> f64 {
        self.c[0][0] + self.c[1][1] + self.c[2][2]
    }

    /// `½ (T + Tᵀ)`.
    pub fn sym(&self) -> Self {
        Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (self.c[i][j] + self.c[j][i]))),
        }
    }

    /// Single contraction `A · B`.
    pub fn dot(&self, other: &Tensor2) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.c[i][k] * other.c[k][j]).sum();
            }
        }
        Tensor2 { c: out }
    }

    /// `A · v`.
    pub fn dot_vec(&self, v: &Vector3) -> Vector3 {
        Vector3(std::array::from_fn(|i| {
            self.c[i][0] * v[0] + self.c[i][1] * v[1] + self.c[i][2] * v[2]
        }))
    }

    /// `v · A`, i.e. `Aᵀ · v`.
    pub fn vec_dot(&self, v: &Vector3) -> Vector3 {
        Vector3(std::array::from_fn(|j| {
            v[0] * self.c[0][j] + v[1] * self.c[1][j] + v[2] * self.c[2][j]
        }))
    }

    /// Row `i` as a vector.
    pub fn row(&self, i: usize) -> Vector3 {
        Vector3(self.c[i])
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vector3 {
        Vector3([self.c[0][j], self.c[1][j], self.c[2][j]])
    }

    /// Full contraction `A : B = Σ A_ij B_ij`.
    pub fn ddot(&self, other: &Tensor2) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.c[i][j] * other.c[i][j];
            }
        }
        s
    }

    pub fn det(&self) -> f64 {
        let c = &self.c;
        c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1])
            - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
    }

    pub fn inverse(&self) -> Result<Tensor2, Error> {
        let det = self.det();
        if !det.is_finite() || det.abs() <= SINGULAR_DET {
            return Err(Error::SingularMatrix { det });
        }
        let c = &self.c;
        let cof = [
            [
                c[1][1] * c[2][2] - c[1][2] * c[2][1],
                c[0][2] * c[2][1] - c[0][1] * c[2][2],
                c[0][1] * c[1][2] - c[0][2] * c[1][1],
            ],
            [
                c[1][2] * c[2][0] - c[1][0] * c[2][2],
                c[0][0] * c[2][2] - c[0][2] * c[2][0],
                c[0][2] * c[1][0] - c[0][0] * c[1][2],
            ],
            [
                c[1][0] * c[2][1] - c[1][1] * c[2][0],
                c[0][1] * c[2][0] - c[0][0] * c[2][1],
                c[0][0] * c[1][1] - c[0][1] * c[1][0],
            ],
        ];
        let inv_det = 1.0 / det;
        Ok(Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| cof[i][j] * inv_det)),
        })
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().flatten().all(|v| v.is_finite())
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: Tensor2) -> Tensor2 {
        Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| self.c[i][j] + rhs.c[i][j])),
        }
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: Tensor2) -> Tensor2 {
        Tensor2 {
            c: std::array::from_fn(|i| std::array::from_fn(|j| self.c[i][j] - rhs.c[i][j])),
        }
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, rhs: Tensor2) {
        for i in 0..3 {
            for j in 0..3 {
                self.c[i][j] += rhs.c[i][j];
            }
        }
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        self * -1.0
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        Tensor2 {
            c: self.c.map(|row| row.map(|v| v * s)),
        }
    }
}

impl Mul<Tensor2> for f64 {
    type Output = Tensor2;
    fn mul(self, t: Tensor2) -> Tensor2 {
        t * self
    }
}

#[inline]
const fn idx4(i: usize, j: usize, k: usize, l: usize) -> usize {
    27 * i + 9 * j + 3 * k + l
}

/// Fourth-order tensor with all 81 components stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    c: [f64; 81],
}

impl Default for Tensor4 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Tensor4 {
    pub fn zero() -> Self {
        Tensor4 { c: [0.0; 81] }
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        t.c[idx4(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// `ℐ_ijkl = δ_ik δ_jl`, so that `ℐ : A = A`.
    pub fn identity() -> Self {
        Self::from_fn(|i, j, k, l| ((i == k) && (j == l)) as u8 as f64)
    }

    /// `½ (δ_ik δ_jl + δ_il δ_jk)`, which maps `A` to `sym(A)`.
    pub fn sym_identity() -> Self {
        Self::from_fn(|i, j, k, l| 0.5 * (((i == k) && (j == l)) as u8 as f64 + ((i == l) && (j == k)) as u8 as f64))
    }

    /// `A ⊗ B` with components `A_ij B_kl`.
    pub fn outer(a: &Tensor2, b: &Tensor2) -> Self {
        Self::from_fn(|i, j, k, l| a.c[i][j] * b.c[k][l])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[idx4(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.c[idx4(i, j, k, l)] = v;
    }

    pub fn as_slice(&self) -> &[f64; 81] {
        &self.c
    }

    /// `(T : A)_ij = Σ_kl T_ijkl A_kl`.
    pub fn double_contract(&self, a: &Tensor2) -> Tensor2 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let base = idx4(i, j, 0, 0);
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += self.c[base + 3 * k + l] * a.c[k][l];
                    }
                }
                *v = s;
            }
        }
        Tensor2 { c: out }
    }

    /// `F · T ·₍₃₎ Fᵀ`: `M_aJdL = Σ_IK F_aI T_IJKL F_dK`.
    pub fn contract_third(&self, f: &Tensor2) -> Tensor4 {
        // first pass contracts the third slot, second pass the first slot
        let mut half = Tensor4::zero();
        for i in 0..3 {
            for j in 0..3 {
                for d in 0..3 {
                    for l in 0..3 {
                        let s: f64 = (0..3).map(|k| self.get(i, j, k, l) * f.c[d][k]).sum();
                        half.set(i, j, d, l, s);
                    }
                }
            }
        }
        let mut out = Tensor4::zero();
        for a in 0..3 {
            for j in 0..3 {
                for d in 0..3 {
                    for l in 0..3 {
                        let s: f64 = (0..3).map(|i| f.c[a][i] * half.get(i, j, d, l)).sum();
                        out.set(a, j, d, l, s);
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for &Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: &Tensor4) -> Tensor4 {
        Tensor4 {
            c: std::array::from_fn(|i| self.c[i] + rhs.c[i]),
        }
    }
}

impl Sub for &Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: &Tensor4) -> Tensor4 {
        Tensor4 {
            c: std::array::from_fn(|i| self.c[i] - rhs.c[i]),
        }
    }
}

impl Mul<f64> for &Tensor4 {
    type Output = Tensor4;
    fn mul(self, s: f64) -> Tensor4 {
        Tensor4 { c: self.c.map(|v| v * s) }
    }
}

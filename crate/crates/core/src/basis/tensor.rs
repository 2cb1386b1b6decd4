use crate::{Error, Matrix, Result, Vector};

/// Third-order tensor `Θ ∈ ℝ^{N×n×n}` symmetric in its last two indices,
/// stored as the `n(n+1)/2` columns `θ_ij`, `i ≤ j`, in row-major pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTensor {
    n: usize,
    data: Matrix,
    orthogonalized: bool,
}

/// Packed position of the pair `(i, j)` for a tensor of size `n`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Pairs `(i, j)` with `i ≤ j` in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

impl QuadTensor {
    pub fn zeros(dofs: usize, n: usize) -> Self {
        Self {
            n,
            data: Matrix::zeros(dofs, n * (n + 1) / 2),
            orthogonalized: false,
        }
    }

    /// Wraps packed columns; `data` must have `n(n+1)/2` columns.
    pub fn from_packed(n: usize, data: Matrix) -> Result<Self> {
        if data.ncols() != n * (n + 1) / 2 {
            return Err(Error::dims("packed tensor needs n(n+1)/2 columns"));
        }
        Ok(Self {
            n,
            data,
            orthogonalized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dofs(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_orthogonalized(&self) -> bool {
        self.orthogonalized
    }

    pub(crate) fn mark_orthogonalized(&mut self) {
        self.orthogonalized = true;
    }

    pub fn packed(&self) -> &Matrix {
        &self.data
    }

    pub fn column(&self, i: usize, j: usize) -> Vector {
        self.data.column(pair_index(self.n, i, j)).clone_owned()
    }

    pub fn set_column(&mut self, i: usize, j: usize, v: &Vector) {
        self.data.set_column(pair_index(self.n, i, j), v);
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    fn check_len(&self, z: &Vector) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::dims(
                "reduced vector length differs from the tensor size",
            ));
        }
        Ok(())
    }

    /// `Σ_ij θ_ij a_i b_j`.
    pub fn contract2(&self, a: &Vector, b: &Vector) -> Result<Vector> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(&self.data * self.pair_weights(a, b))
    }

    /// Weights `w` with `Θab = data · w`.
    pub fn pair_weights(&self, a: &Vector, b: &Vector) -> Vector {
        let mut w = Vector::zeros(self.data.ncols());
        for (k, (i, j)) in pairs(self.n).enumerate() {
            w[k] = if i == j {
                a[i] * b[i]
            } else {
                a[i] * b[j] + a[j] * b[i]
            };
        }
        w
    }

    /// Selector `S` (packed × n) with `Θz = data · S`, i.e. column `k` of
    /// `Θz` is `Σ_j θ_kj z_j`.
    pub fn contraction_selector(&self, z: &Vector) -> Matrix {
        let mut s = Matrix::zeros(self.data.ncols(), self.n);
        for (p, (i, j)) in pairs(self.n).enumerate() {
            s[(p, i)] += z[j];
            if i != j {
                s[(p, j)] += z[i];
            }
        }
        s
    }

    /// The N×n matrix `Θz`.
    pub fn contract1(&self, z: &Vector) -> Result<Matrix> {
        self.check_len(z)?;
        Ok(&self.data * self.contraction_selector(z))
    }

    /// Symmetric n×n matrix `G_jk = θ_jkᵀ w`.
    pub fn project(&self, w: &Vector) -> Matrix {
        let packed = self.data.tr_mul(w);
        self.unpack(&packed)
    }

    /// Expands a packed pair vector into a symmetric matrix.
    pub fn unpack(&self, packed: &Vector) -> Matrix {
        let mut g = Matrix::zeros(self.n, self.n);
        for (p, (i, j)) in pairs(self.n).enumerate() {
            g[(i, j)] = packed[p];
            g[(j, i)] = packed[p];
        }
        g
    }

    /// Tensor whose packed columns are `A · θ_ij`.
    pub fn map_rows(&self, a: impl Fn(&Matrix) -> Matrix) -> Self {
        Self {
            n: self.n,
            data: a(&self.data),
            orthogonalized: self.orthogonalized,
        }
    }
}

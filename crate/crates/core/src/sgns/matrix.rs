use std::sync::atomic::{AtomicU32, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::vocab::hex_digest;

/// Which side of the network a matrix belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Input weights; rows are averaged over a context window.
    Context,
    /// Output weights; rows are scored against the context mean.
    Target,
}

/// Dense row-major `|V| x d` table of 32-bit word vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    role: Role,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize, role: Role) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            role,
            data: vec![0.0; rows * dim],
        }
    }

    /// Wraps row-major data. Panics if `data.len() != rows * dim`.
    pub fn from_vec(rows: usize, dim: usize, role: Role, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), rows * dim, "data length must equal rows * dim");
        EmbeddingMatrix {
            rows,
            dim,
            role,
            data,
        }
    }

    /// Rows drawn uniformly from `[-0.5/d, 0.5/d]`.
    pub fn uniform(rows: usize, dim: usize, role: Role, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f32;
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        EmbeddingMatrix {
            rows,
            dim,
            role,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Hex SHA-256 over the little-endian bytes of every entry.
    pub fn content_hash(&self) -> String {
        let bytes: Vec<u8> = self.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        hex_digest(&bytes)
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.row(i)
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// Cosine similarity between row `i` of `self` and row `j` of `other`,
    /// 0 when either row is all zeros.
    pub fn cosine(&self, i: usize, other: &EmbeddingMatrix, j: usize) -> f64 {
        cosine(self.row(i), other.row(j))
    }
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Fresh `(context, target)` pair: seeded uniform context rows, zero targets.
pub fn init_matrices(vocab_size: usize, dim: usize, seed: u64) -> (EmbeddingMatrix, EmbeddingMatrix) {
    (
        EmbeddingMatrix::uniform(vocab_size, dim, Role::Context, seed),
        EmbeddingMatrix::zeros(vocab_size, dim, Role::Target),
    )
}

/// Row storage the SGD kernel reads from and writes to. Reads and updates
/// go through 64-bit buffers.
pub trait ParamRows {
    fn rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn read_row(&self, row: usize, out: &mut [f64]);
    fn add_to_row(&mut self, row: usize, delta: &[f64]);
}

impl ParamRows for EmbeddingMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn read_row(&self, row: usize, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(self.row(row)) {
            *o = f64::from(v);
        }
    }

    fn add_to_row(&mut self, row: usize, delta: &[f64]) {
        for (v, &d) in self.row_mut(row).iter_mut().zip(delta) {
            *v = (f64::from(*v) + d) as f32;
        }
    }
}

/// Read-only view over a matrix that must not change.
#[derive(Clone, Copy)]
pub struct Frozen<'a>(pub &'a EmbeddingMatrix);

impl ParamRows for Frozen<'_> {
    fn rows(&self) -> usize {
        self.0.rows
    }

    fn dim(&self) -> usize {
        self.0.dim
    }

    fn read_row(&self, row: usize, out: &mut [f64]) {
        self.0.read_row(row, out)
    }

    fn add_to_row(&mut self, _row: usize, _delta: &[f64]) {
        unreachable!("update applied to a frozen matrix")
    }
}

const _: () = assert!(std::mem::align_of::<AtomicU32>() == std::mem::align_of::<f32>());
const _: () = assert!(std::mem::size_of::<AtomicU32>() == std::mem::size_of::<f32>());

/// Lock-free view shared by parallel workers. Concurrent updates to the same
/// row may overwrite each other; no update is torn.
#[derive(Clone, Copy)]
pub struct SharedRows<'a> {
    cells: &'a [AtomicU32],
    rows: usize,
    dim: usize,
}

impl<'a> SharedRows<'a> {
    pub fn new(matrix: &'a mut EmbeddingMatrix) -> Self {
        let (rows, dim) = (matrix.rows, matrix.dim);
        let data: &'a mut [f32] = &mut matrix.data;
        // SAFETY: AtomicU32 has the size and alignment of f32 (asserted above),
        // and the unique borrow of `data` outlives every view created here.
        let cells = unsafe { &*(data as *mut [f32] as *const [AtomicU32]) };
        SharedRows { cells, rows, dim }
    }
}

impl ParamRows for SharedRows<'_> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn read_row(&self, row: usize, out: &mut [f64]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f64::from(f32::from_bits(c.load(Ordering::Relaxed)));
        }
    }

    fn add_to_row(&mut self, row: usize, delta: &[f64]) {
        let cells = &self.cells[row * self.dim..(row + 1) * self.dim];
        for (c, &d) in cells.iter().zip(delta) {
            let v = f64::from(f32::from_bits(c.load(Ordering::Relaxed))) + d;
            c.store((v as f32).to_bits(), Ordering::Relaxed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_matrices() {
        let a = init_matrices(30, 8, 42);
        let b = init_matrices(30, 8, 42);
        assert_eq!(a.0.as_slice(), b.0.as_slice());
        assert_ne!(a.0, init_matrices(30, 8, 43).0);
    }

    #[test]
    fn target_starts_at_zero() {
        let (_, target) = init_matrices(10, 4, 1);
        assert!(target.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(target.role(), Role::Target);
    }

    #[test]
    fn context_init_is_centered_and_bounded() {
        let dim = 10;
        let (context, _) = init_matrices(10_000, dim, 7);
        let bound = 0.5 / dim as f64;
        let values = context.as_slice();
        assert_eq!(values.len(), 100_000);
        assert!(values.iter().all(|&v| f64::from(v).abs() <= bound));
        let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / values.len() as f64;
        // uniform on [-b, b] has sd b / sqrt(3)
        let sd_of_mean = bound / 3f64.sqrt() / (values.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd_of_mean, "mean {mean}");
    }

    #[test]
    fn shared_view_writes_through() {
        let mut m = EmbeddingMatrix::zeros(2, 3, Role::Context);
        {
            let mut view = SharedRows::new(&mut m);
            view.add_to_row(1, &[1.0, 2.0, 3.0]);
            let mut out = [0.0; 3];
            view.read_row(1, &mut out);
            assert_eq!(out, [1.0, 2.0, 3.0]);
        }
        assert_eq!(m.row(1), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn cosine_of_zero_row_is_zero() {
        let m = EmbeddingMatrix::from_vec(2, 2, Role::Context, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(m.cosine(0, &m, 1), 0.0);
        assert!((m.cosine(1, &m, 1) - 1.0).abs() < 1e-12);
    }
}
